use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiccatiError>;

#[derive(Debug, Error)]
pub enum RiccatiError {
    #[error("failed to parse model: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix `{name}` is not square ({rows}x{cols})")]
    NonSquare {
        name: String,
        rows: usize,
        cols: usize,
    },

    #[error("no initial condition Q was provided")]
    MissingInitialCondition,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix exponential overflowed (|t|*||M|| = {0:.3e})")]
    Overflow(f64),

    #[error("matrix is not Hurwitz (spectral abscissa {0:.6e})")]
    NotHurwitz(f64),

    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semi-definite (min eigenvalue {0:.6e})")]
    Indefinite(f64),

    #[error("matrix `{name}` is not positive definite (min eigenvalue {min_eigenvalue:.6e})")]
    NotPositiveDefinite { name: String, min_eigenvalue: f64 },

    #[error("no stable invariant subspace of dimension {expected} (found {found} stable eigenvalues)")]
    NoStableSubspace { expected: usize, found: usize },

    #[error("{what} residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("matrix `{name}` is numerically singular (condition estimate {condition:.3e})")]
    Singular { name: String, condition: f64 },

    #[error("eigenvalue computation did not converge")]
    EigenFailure,

    #[error("integrator step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    MaxSteps(usize),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<RiccatiError>,
    },
}

impl RiccatiError {
    pub fn at(stage: &'static str) -> impl FnOnce(RiccatiError) -> RiccatiError {
        move |source| RiccatiError::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Strips stage labels down to the originating error.
    pub fn root(&self) -> &RiccatiError {
        match self {
            RiccatiError::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by malformed or inconsistent input rather than
    /// numerical breakdown.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            RiccatiError::Parse(_)
                | RiccatiError::Io(_)
                | RiccatiError::DimensionMismatch(_)
                | RiccatiError::NonSquare { .. }
                | RiccatiError::MissingInitialCondition
                | RiccatiError::NonFinite(_)
                | RiccatiError::InvalidArgument(_)
                | RiccatiError::NotSymmetric(_)
                | RiccatiError::Indefinite(_)
        )
    }
}
