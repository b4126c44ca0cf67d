//! Closed-form transition semigroup `E_t(Q) = e^{tB} C_t(Q)⁻¹` with
//! `C_t(Q) = I + (Q − P∞) S_t`, and the flow, difference and derivative
//! formulas built on it.

use std::fmt;

use nalgebra::LU;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiccatiError};
use crate::gramian::{gramian_sequence, gramian_with_exp};
use crate::model::InitialCondition;
use crate::spectral::{clamp_psd, norm1, norm2, symmetrize};
use crate::steady_state::SteadyState;
use crate::Mat;

/// `C` is reported singular beyond this 1-norm condition estimate.
pub const MAX_COND_C: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Closed => "closed",
            Method::Oracle => "oracle",
        })
    }
}

/// Flow values on a time grid, optionally with the transition matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub values: Vec<Mat>,
    pub transitions: Option<Vec<Mat>>,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetFactor {
    pub t: f64,
    pub q: Mat,
    pub s_t: Mat,
    pub exp_tb: Mat,
    pub c: Mat,
    pub c_inv: Mat,
    pub e: Mat,
    /// `‖C‖₁·‖C⁻¹‖₁`.
    pub cond_c: f64,
    /// `‖C·C⁻¹ − I‖₁` after refinement.
    pub inverse_residual: f64,
}

fn check_q(steady: &SteadyState, q: &Mat) -> Result<Mat> {
    if q.shape() != (steady.model.dim, steady.model.dim) {
        return Err(RiccatiError::DimensionMismatch(format!(
            "Q is {:?}, model dimension is {}",
            q.shape(),
            steady.model.dim
        )));
    }
    Ok(InitialCondition::new(q.clone(), &steady.tol)?.into_inner())
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(RiccatiError::InvalidArgument(format!(
            "time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Inverse by partial-pivoting LU plus one step of iterative refinement.
fn refined_inverse(c: &Mat) -> Result<(Mat, f64, f64)> {
    let n = c.nrows();
    let id = Mat::identity(n, n);
    let lu = LU::new(c.clone());
    let mut x = lu.solve(&id).ok_or(RiccatiError::Singular {
        name: "C_t(Q)".into(),
        condition: f64::INFINITY,
    })?;
    let resid = &id - c * &x;
    if let Some(dx) = lu.solve(&resid) {
        x += dx;
    }
    let cond = norm1(c) * norm1(&x);
    if !cond.is_finite() || cond > MAX_COND_C {
        return Err(RiccatiError::Singular {
            name: "C_t(Q)".into(),
            condition: cond,
        });
    }
    let inverse_residual = norm1(&(c * &x - id));
    Ok((x, cond, inverse_residual))
}

fn assemble(steady: &SteadyState, q: Mat, t: f64, s_t: Mat, exp_tb: Mat) -> Result<FloquetFactor> {
    let r = steady.model.dim;
    let c = Mat::identity(r, r) + (&q - &steady.p_inf) * &s_t;
    let (c_inv, cond_c, inverse_residual) = refined_inverse(&c)?;
    let e = &exp_tb * &c_inv;
    Ok(FloquetFactor {
        t,
        q,
        s_t,
        exp_tb,
        c,
        c_inv,
        e,
        cond_c,
        inverse_residual,
    })
}

/// `C_t(Q)`, its inverse and `E_t(Q)`.
pub fn c_matrix(steady: &SteadyState, q: &Mat, t: f64) -> Result<FloquetFactor> {
    let q = check_q(steady, q)?;
    check_t(t)?;
    let (s_t, exp_tb) = gramian_with_exp(&steady.b, &steady.model.s, t)?;
    assemble(steady, q, t, s_t, exp_tb)
}

/// Factors along an increasing grid, sharing Gramian increments.
pub fn factors_on_grid(steady: &SteadyState, q: &Mat, grid: &[f64]) -> Result<Vec<FloquetFactor>> {
    let q = check_q(steady, q)?;
    let seq = gramian_sequence(&steady.b, &steady.model.s, grid)?;
    grid.par_iter()
        .zip(seq.into_par_iter())
        .map(|(&t, (s_t, exp_tb))| assemble(steady, q.clone(), t, s_t, exp_tb))
        .collect()
}

pub fn transition(steady: &SteadyState, q: &Mat, t: f64) -> Result<Mat> {
    Ok(c_matrix(steady, q, t)?.e)
}

/// `E_{s,t}(Q) = E_{t−s}(φ_s(Q))`.
pub fn transition_two_time(steady: &SteadyState, q: &Mat, s: f64, t: f64) -> Result<Mat> {
    check_t(s)?;
    check_t(t)?;
    if s > t {
        return Err(RiccatiError::InvalidArgument(format!(
            "need s <= t, got s = {s}, t = {t}"
        )));
    }
    let r = steady.model.dim;
    if s == t {
        check_q(steady, q)?;
        return Ok(Mat::identity(r, r));
    }
    let phi_s = flow(steady, q, s)?;
    transition(steady, &phi_s, t - s)
}

fn psd_threshold(steady: &SteadyState, q: &Mat) -> f64 {
    steady.tol.psd_tol * norm2(&steady.p_inf).max(norm2(q)).max(1.0)
}

/// `φ_t(Q)` from an assembled factor.
pub fn flow_from_factor(steady: &SteadyState, f: &FloquetFactor) -> Result<Mat> {
    if f.t == 0.0 {
        return Ok(f.q.clone());
    }
    let phi = &steady.p_inf + &f.e * (&f.q - &steady.p_inf) * f.exp_tb.transpose();
    clamp_psd(&phi, || psd_threshold(steady, &f.q))
}

pub fn flow(steady: &SteadyState, q: &Mat, t: f64) -> Result<Mat> {
    flow_from_factor(steady, &c_matrix(steady, q, t)?)
}

/// `φ_t(Q1) − φ_t(Q2) = E_t(Q1)(Q1 − Q2)E_t(Q2)ᵀ`.
pub fn flow_difference(steady: &SteadyState, q1: &Mat, q2: &Mat, t: f64) -> Result<Mat> {
    let f1 = c_matrix(steady, q1, t)?;
    let f2 = c_matrix(steady, q2, t)?;
    Ok(&f1.e * (&f1.q - &f2.q) * f2.e.transpose())
}

/// `E_t(Q1) − E_t(Q2) = e^{tB} C_t(Q1)⁻¹ (Q2 − Q1) S_t C_t(Q2)⁻¹`.
pub fn e_difference(steady: &SteadyState, q1: &Mat, q2: &Mat, t: f64) -> Result<Mat> {
    let f1 = c_matrix(steady, q1, t)?;
    let f2 = c_matrix(steady, q2, t)?;
    Ok(&f1.e * (&f2.q - &f1.q) * &f1.s_t * &f2.c_inv)
}

/// Directional derivative `∇φ_t(Q)·H = E_t(Q) H E_t(Q)ᵀ`.
pub fn frechet_derivative(steady: &SteadyState, q: &Mat, h: &Mat, t: f64) -> Result<Mat> {
    if h.shape() != (steady.model.dim, steady.model.dim) {
        return Err(RiccatiError::DimensionMismatch(format!(
            "H is {:?}, model dimension is {}",
            h.shape(),
            steady.model.dim
        )));
    }
    let asym = crate::spectral::asymmetry(h);
    if asym > steady.tol.sym_tol * (1.0 + norm2(h)) {
        return Err(RiccatiError::NotSymmetric(asym));
    }
    let e = transition(steady, q, t)?;
    Ok(symmetrize(&(&e * h * e.transpose())))
}

/// Flow and transition matrices on a grid from one steady state.
pub fn trajectory(steady: &SteadyState, q: &Mat, grid: &[f64]) -> Result<Trajectory> {
    let factors = factors_on_grid(steady, q, grid)?;
    let values = factors
        .par_iter()
        .map(|f| flow_from_factor(steady, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        grid: grid.to_vec(),
        values,
        transitions: Some(factors.into_iter().map(|f| f.e).collect()),
        method: Method::Closed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelTriple;
    use crate::steady_state::steady_state;
    use crate::Tolerances;
    use approx::assert_relative_eq;

    fn scalar() -> SteadyState {
        steady_state(&ModelTriple::scalar(0.0, 1.0, 1.0), &Tolerances::default()).unwrap()
    }

    fn m1(x: f64) -> Mat {
        Mat::from_element(1, 1, x)
    }

    #[test]
    fn c_matrix_examples() {
        let st = scalar();
        let f = c_matrix(&st, &m1(0.0), 1.0).unwrap();
        assert_relative_eq!(f.c[(0, 0)], 0.5676676416183064, epsilon = 1e-14);
        assert_relative_eq!(f.c_inv[(0, 0)], 1.7615941559557649, epsilon = 1e-13);
        assert_eq!(c_matrix(&st, &m1(3.0), 0.0).unwrap().c, m1(1.0));
        let f = c_matrix(&st, &st.p_inf, 5.0).unwrap();
        assert_relative_eq!(f.c, m1(1.0), epsilon = 1e-12);
    }

    #[test]
    fn transition_examples() {
        let st = scalar();
        assert_relative_eq!(transition(&st, &m1(1.0), 2.0).unwrap()[(0, 0)], (-2f64).exp(), epsilon = 1e-12);
        assert_relative_eq!(transition(&st, &m1(0.0), 1.0).unwrap()[(0, 0)], 0.6480542736638855, epsilon = 1e-13);
        assert_eq!(transition(&st, &m1(0.4), 0.0).unwrap(), m1(1.0));
    }

    #[test]
    fn two_time_examples() {
        let st = scalar();
        assert_eq!(transition_two_time(&st, &m1(0.0), 0.8, 0.8).unwrap(), m1(1.0));
        assert_relative_eq!(
            transition_two_time(&st, &m1(0.0), 0.0, 1.3).unwrap(),
            transition(&st, &m1(0.0), 1.3).unwrap(),
            epsilon = 1e-14
        );
        let e = transition_two_time(&st, &m1(0.0), 1.0, 2.0).unwrap();
        assert_relative_eq!(e[(0, 0)], 1f64.cosh() / 2f64.cosh(), epsilon = 1e-12);
        assert!(transition_two_time(&st, &m1(0.0), 2.0, 1.0).is_err());
    }

    #[test]
    fn flow_examples() {
        let st = scalar();
        assert_relative_eq!(flow(&st, &m1(1.0), 7.0).unwrap()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(flow(&st, &m1(0.0), 1.0).unwrap()[(0, 0)], 1f64.tanh(), epsilon = 1e-13);
        assert_eq!(flow(&st, &m1(0.37), 0.0).unwrap(), m1(0.37));
        assert!(flow(&st, &m1(-1.0), 1.0).is_err());
    }

    #[test]
    fn difference_examples() {
        let st = scalar();
        assert_eq!(flow_difference(&st, &m1(0.5), &m1(0.5), 1.0).unwrap(), m1(0.0));
        let d = flow_difference(&st, &m1(0.0), &m1(1.0), 1.0).unwrap();
        assert_relative_eq!(d[(0, 0)], 1f64.tanh() - 1.0, epsilon = 1e-13);
        let d = flow_difference(&st, &m1(0.3), &st.p_inf, 0.9).unwrap();
        let direct = flow(&st, &m1(0.3), 0.9).unwrap() - &st.p_inf;
        assert_relative_eq!(d, direct, epsilon = 1e-13);
        let de = e_difference(&st, &m1(0.0), &m1(2.0), 1.2).unwrap();
        let direct = transition(&st, &m1(0.0), 1.2).unwrap() - transition(&st, &m1(2.0), 1.2).unwrap();
        assert_relative_eq!(de, direct, epsilon = 1e-13);
    }

    #[test]
    fn frechet_examples() {
        let st = scalar();
        assert_eq!(frechet_derivative(&st, &m1(0.0), &m1(0.0), 1.0).unwrap(), m1(0.0));
        let d = frechet_derivative(&st, &st.p_inf, &m1(1.0), 1.0).unwrap();
        assert_relative_eq!(d[(0, 0)], (-2f64).exp(), epsilon = 1e-12);
        let d = frechet_derivative(&st, &m1(0.0), &m1(1.0), 1.0).unwrap();
        assert_relative_eq!(d[(0, 0)], 0.41997434161402614, epsilon = 1e-13);
    }

    #[test]
    fn trajectory_matches_pointwise() {
        let st = scalar();
        let grid = [0.0, 0.5, 1.0, 1.5, 4.0];
        let traj = trajectory(&st, &m1(0.0), &grid).unwrap();
        assert_eq!(traj.values[0], m1(0.0));
        for (k, &t) in grid.iter().enumerate() {
            assert_relative_eq!(traj.values[k][(0, 0)], t.tanh(), epsilon = 1e-13);
            assert_relative_eq!(traj.transitions.as_ref().unwrap()[k][(0, 0)], 1.0 / t.cosh(), epsilon = 1e-13);
        }
    }
}
