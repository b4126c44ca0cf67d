//! Finite-horizon observability Gramian `S_t = ∫₀ᵗ e^{sBᵀ} S e^{sB} ds`.
//!
//! A short base step is taken with the augmented block exponential of
//! `[[−Bᵀ, S], [0, B]]`, then the horizon is reached by doubling:
//! `S_{2τ} = S_τ + e^{τBᵀ} S_τ e^{τB}`. Every doubling adds positive
//! semi-definite terms, so the result stays accurate for long horizons where
//! the anti-stable block `e^{−tBᵀ}` would overflow.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiccatiError};
use crate::spectral::{expm, lambda_min, norm1, norm2, symmetrize};
use crate::Mat;

/// Base-step bound on `h·‖[[−Bᵀ, S], [0, B]]‖₁`.
const BASE_STEP_NORM: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramianValue {
    pub t: f64,
    pub s_t: Mat,
}

/// `S_t` and `e^{tB}` from one pass.
pub fn gramian_with_exp(b: &Mat, s: &Mat, t: f64) -> Result<(Mat, Mat)> {
    if !t.is_finite() || t < 0.0 {
        return Err(RiccatiError::InvalidArgument(format!(
            "Gramian horizon must be finite and nonnegative, got {t}"
        )));
    }
    let r = b.nrows();
    if t == 0.0 {
        return Ok((Mat::zeros(r, r), Mat::identity(r, r)));
    }
    let mut block = Mat::zeros(2 * r, 2 * r);
    block.view_mut((0, 0), (r, r)).copy_from(&(-b.transpose()));
    block.view_mut((0, r), (r, r)).copy_from(s);
    block.view_mut((r, r), (r, r)).copy_from(b);

    let nrm = norm1(&block);
    let doublings = if nrm * t <= BASE_STEP_NORM {
        0
    } else {
        (nrm * t / BASE_STEP_NORM).log2().ceil() as i32
    };
    let h = t * 2f64.powi(-doublings);
    let e = expm(&block, h)?;
    let mut exp_b = e.view((r, r), (r, r)).clone_owned();
    let mut gram = symmetrize(&(exp_b.transpose() * e.view((0, r), (r, r))));
    for _ in 0..doublings {
        gram = symmetrize(&(&gram + exp_b.transpose() * &gram * &exp_b));
        exp_b = &exp_b * &exp_b;
    }
    if !gram.iter().chain(exp_b.iter()).all(|x| x.is_finite()) {
        return Err(RiccatiError::Overflow(nrm * t));
    }
    Ok((gram, exp_b))
}

pub fn gramian_at(b: &Mat, s: &Mat, t: f64) -> Result<GramianValue> {
    let (s_t, _) = gramian_with_exp(b, s, t)?;
    Ok(GramianValue { t, s_t })
}

/// Gramian values along an increasing grid of nonnegative times.
pub fn gramian_curve(b: &Mat, s: &Mat, grid: &[f64]) -> Result<Vec<GramianValue>> {
    check_grid(grid)?;
    grid.iter().map(|&t| gramian_at(b, s, t)).collect()
}

/// `(S_t, e^{tB})` along an increasing grid, stepping between neighbours
/// with `S_{t+Δ} = S_t + e^{tBᵀ} S_Δ e^{tB}`. Increments that repeat (uniform
/// grids) are computed once.
pub fn gramian_sequence(b: &Mat, s: &Mat, grid: &[f64]) -> Result<Vec<(Mat, Mat)>> {
    check_grid(grid)?;
    let mut out: Vec<(Mat, Mat)> = Vec::with_capacity(grid.len());
    let mut cache: Vec<(f64, Mat, Mat)> = Vec::new();
    let mut prev_t = 0.0;
    for &t in grid {
        let next = match out.last() {
            None => gramian_with_exp(b, s, t)?,
            Some((s_prev, e_prev)) => {
                let dt = t - prev_t;
                let hit = cache
                    .iter()
                    .position(|(d, _, _)| (d - dt).abs() <= 1e-13 * dt.max(1.0));
                let idx = match hit {
                    Some(i) => i,
                    None => {
                        let (sd, ed) = gramian_with_exp(b, s, dt)?;
                        cache.push((dt, sd, ed));
                        cache.len() - 1
                    }
                };
                let (_, sd, ed) = &cache[idx];
                let s_t = symmetrize(&(s_prev + e_prev.transpose() * sd * e_prev));
                (s_t, e_prev * ed)
            }
        };
        prev_t = t;
        out.push(next);
    }
    Ok(out)
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(RiccatiError::InvalidArgument(
            "time grid must contain finite nonnegative values".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RiccatiError::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Smallest eigenvalue of `S_t − S_s` over consecutive pairs of a curve,
/// followed by `λ_min(S∞ − S_last)`. Negative values beyond round-off break
/// Loewner monotonicity.
pub fn monotonicity_margins(curve: &[GramianValue], s_inf: &Mat) -> Vec<f64> {
    let mut out: Vec<f64> = curve
        .windows(2)
        .map(|w| lambda_min(&(&w[1].s_t - &w[0].s_t)))
        .collect();
    if let Some(last) = curve.last() {
        out.push(lambda_min(&(s_inf - &last.s_t)));
    }
    out
}

/// Loewner monotonicity tolerance `mono_tol·‖S∞‖`.
pub fn mono_threshold(mono_tol: f64, s_inf: &Mat) -> f64 {
    mono_tol * norm2(s_inf)
}
