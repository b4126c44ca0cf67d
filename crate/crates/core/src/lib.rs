//! Transition semigroups of time-invariant matrix Riccati flows through the
//! factorization `E_t(Q) = e^{tB} C_t(Q)⁻¹`, with the fixed points,
//! Gramians and contraction constants it depends on, plus an independent
//! ODE-integration oracle.

pub mod bounds;
pub mod error;
pub mod floquet;
pub mod gramian;
pub mod method;
pub mod model;
pub mod oracle;
pub mod random;
pub mod special_case;
pub mod spectral;
pub mod steady_state;
pub mod tolerance;
pub mod verify;

pub use error::{Result, RiccatiError};
pub use model::{InitialCondition, ModelFile, ModelTriple};
pub use steady_state::SteadyState;
pub use tolerance::Tolerances;

/// Dense real matrix used throughout.
pub type Mat = nalgebra::DMatrix<f64>;
