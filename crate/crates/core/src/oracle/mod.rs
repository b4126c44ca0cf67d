//! Independent reference path: direct adaptive integration of the Riccati
//! flow and of the transition ODE `∂_u E = (A − φ_u(Q) S) E`, plus exact
//! scalar solutions.
//!
//! Nothing here touches the closed-form factorization, so agreement with it
//! is a genuine cross-check.

pub mod quadrature;
pub mod rk;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiccatiError};
use crate::floquet::{Method, Trajectory};
use crate::gramian::check_grid;
use crate::model::ModelTriple;
use crate::spectral::lambda_min;
use crate::Mat;

pub use rk::StepStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub method: String,
    pub max_steps: usize,
    /// Record the smallest eigenvalue of `P` over every accepted step.
    pub track_psd: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            method: "dopri5".into(),
            max_steps: 2_000_000,
            track_psd: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| (1e-13..=1e-2).contains(&x);
        if !ok(self.rel_tol) || !ok(self.abs_tol) {
            return Err(RiccatiError::InvalidArgument(format!(
                "integrator tolerances must lie in [1e-13, 1e-2] (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(RiccatiError::InvalidArgument("max_step must be positive".into()));
        }
        if self.method != "dopri5" {
            return Err(RiccatiError::InvalidArgument(format!(
                "unknown integrator `{}`",
                self.method
            )));
        }
        Ok(())
    }
}

/// Diagnostics of one oracle run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OracleStats {
    pub steps: StepStats,
    /// `min λ_min(P_u)` over accepted steps; NaN unless tracking was on.
    pub min_eigenvalue: f64,
}

fn symmetrize_flat(buf: &mut [f64], r: usize) {
    for i in 0..r {
        for j in (i + 1)..r {
            let m = 0.5 * (buf[i + j * r] + buf[j + i * r]);
            buf[i + j * r] = m;
            buf[j + i * r] = m;
        }
    }
}

/// Right-hand side of the joint `(P, E)` system on column-major slices.
/// With `with_e = false` only the `P` block is present.
struct JointRhs<'a> {
    model: &'a ModelTriple,
    with_e: bool,
}

impl JointRhs<'_> {
    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let r = self.model.dim;
        let n2 = r * r;
        let p = Mat::from_column_slice(r, r, &y[..n2]);
        let ps = &p * &self.model.s;
        let ap = &self.model.a * &p;
        let drift = &ap + ap.transpose() + &self.model.r - &ps * &p;
        dy[..n2].copy_from_slice(drift.as_slice());
        if self.with_e {
            let e = Mat::from_column_slice(r, r, &y[n2..]);
            let gen = &self.model.a - &ps;
            dy[n2..].copy_from_slice((gen * e).as_slice());
        }
    }
}

fn run(
    model: &ModelTriple,
    y0: Vec<f64>,
    t0: f64,
    outputs: &[f64],
    with_e: bool,
    config: &IntegratorConfig,
) -> Result<(Vec<Vec<f64>>, OracleStats)> {
    config.validate()?;
    let r = model.dim;
    let rhs = JointRhs { model, with_e };
    let mut min_eig = f64::NAN;
    let track = config.track_psd;
    let (ys, steps) = rk::integrate(
        |_, y, dy| rhs.eval(y, dy),
        |y| symmetrize_flat(&mut y[..r * r], r),
        |_, y| {
            if track {
                let ev = lambda_min(&Mat::from_column_slice(r, r, &y[..r * r]));
                min_eig = if min_eig.is_nan() { ev } else { min_eig.min(ev) };
            }
        },
        t0,
        y0,
        outputs,
        config,
    )?;
    Ok((
        ys,
        OracleStats {
            steps,
            min_eigenvalue: min_eig,
        },
    ))
}

fn check_q(model: &ModelTriple, q: &Mat) -> Result<()> {
    if q.shape() != (model.dim, model.dim) {
        return Err(RiccatiError::DimensionMismatch(format!(
            "Q is {:?}, model dimension is {}",
            q.shape(),
            model.dim
        )));
    }
    Ok(())
}

/// `φ_t(Q)` at each grid point by direct integration of `∂P = Λ(P)`.
pub fn integrate_riccati(
    model: &ModelTriple,
    q: &Mat,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<(Trajectory, OracleStats)> {
    check_q(model, q)?;
    check_grid(grid)?;
    let r = model.dim;
    let (ys, stats) = run(model, q.as_slice().to_vec(), 0.0, grid, false, config)?;
    let values = ys.iter().map(|y| Mat::from_column_slice(r, r, y)).collect();
    Ok((
        Trajectory {
            grid: grid.to_vec(),
            values,
            transitions: None,
            method: Method::Oracle,
        },
        stats,
    ))
}

/// `φ_t(Q)` and `E_t(Q)` at each grid point from one joint integration.
pub fn integrate_joint(
    model: &ModelTriple,
    q: &Mat,
    grid: &[f64],
    config: &IntegratorConfig,
) -> Result<(Trajectory, OracleStats)> {
    check_q(model, q)?;
    check_grid(grid)?;
    let r = model.dim;
    let n2 = r * r;
    let mut y0 = q.as_slice().to_vec();
    y0.extend_from_slice(Mat::identity(r, r).as_slice());
    let (ys, stats) = run(model, y0, 0.0, grid, true, config)?;
    let values = ys.iter().map(|y| Mat::from_column_slice(r, r, &y[..n2])).collect();
    let transitions = ys.iter().map(|y| Mat::from_column_slice(r, r, &y[n2..])).collect();
    Ok((
        Trajectory {
            grid: grid.to_vec(),
            values,
            transitions: Some(transitions),
            method: Method::Oracle,
        },
        stats,
    ))
}

/// `E_{s,t}(Q)`: integrates the flow to `s`, then the transition ODE from
/// `E_{s,s} = I` to `t` alongside the flow.
pub fn integrate_transition(
    model: &ModelTriple,
    q: &Mat,
    s: f64,
    t: f64,
    config: &IntegratorConfig,
) -> Result<Mat> {
    check_q(model, q)?;
    if !(s.is_finite() && t.is_finite()) || s < 0.0 || s > t {
        return Err(RiccatiError::InvalidArgument(format!(
            "need 0 <= s <= t, got s = {s}, t = {t}"
        )));
    }
    let r = model.dim;
    let n2 = r * r;
    let phi_s = if s > 0.0 {
        run(model, q.as_slice().to_vec(), 0.0, &[s], false, config)?.0.remove(0)
    } else {
        q.as_slice().to_vec()
    };
    let mut y0 = phi_s;
    y0.extend_from_slice(Mat::identity(r, r).as_slice());
    let (ys, _) = run(model, y0, s, &[t], true, config)?;
    Ok(Mat::from_column_slice(r, r, &ys[0][n2..]))
}

/// Exact scalar Riccati solution `(φ_t(q), E_t(q))` for `ṗ = 2ap + r − s p²`.
pub fn scalar_analytic(a: f64, r: f64, s: f64, q: f64, t: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) {
        return Err(RiccatiError::InvalidArgument(format!("need s > 0, got {s}")));
    }
    if r < 0.0 || q < 0.0 || t < 0.0 {
        return Err(RiccatiError::InvalidArgument("need r, q, t >= 0".into()));
    }
    let root = (a * a + r * s).sqrt();
    let p_plus = (a + root) / s;
    let b = -root;
    // Scalar Gramian ∫₀ᵗ e^{2bu} s du, written with expm1 for small t.
    let gram = if b == 0.0 {
        s * t
    } else {
        s * (-(2.0 * b * t).exp_m1()) / (-2.0 * b)
    };
    let c = 1.0 + (q - p_plus) * gram;
    let e = (b * t).exp() / c;
    let phi = p_plus + e * (q - p_plus) * (b * t).exp();
    Ok((phi, e))
}
