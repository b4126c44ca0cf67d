use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the solvers and invariant checks.
///
/// All values are relative to the natural scale of the quantity being
/// tested (usually a spectral norm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub sym_tol: f64,
    pub psd_tol: f64,
    pub rank_tol: f64,
    pub care_tol: f64,
    pub lyap_tol: f64,
    pub mono_tol: f64,
    pub check_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sym_tol: 1e-10,
            psd_tol: 1e-10,
            rank_tol: 1e-12,
            care_tol: 1e-9,
            lyap_tol: 1e-9,
            mono_tol: 1e-9,
            check_tol: 1e-9,
        }
    }
}
