//! Seeded generators for validated models, initial conditions and commuting
//! models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RiccatiError};
use crate::model::{validate, ModelTriple};
use crate::spectral::{inv_sqrt_spd, sqrt_psd, symmetrize};
use crate::tolerance::Tolerances;
use crate::Mat;

/// Shift added to `GGᵀ` and `HHᵀ`.
pub const SHIFT: f64 = 0.1;
const MAX_RESAMPLES: usize = 1000;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

fn shifted_gram<R: Rng>(rng: &mut R, r: usize) -> Mat {
    let g = uniform_matrix(rng, r, r);
    symmetrize(&(&g * g.transpose() + Mat::identity(r, r) * SHIFT))
}

/// `A` uniform in `[−1, 1]`, `R = GGᵀ + 0.1·I`, `S = HHᵀ + 0.1·I`,
/// resampled until the model validates.
pub fn random_model<R: Rng>(rng: &mut R, r: usize, tol: &Tolerances) -> Result<ModelTriple> {
    if r == 0 {
        return Err(RiccatiError::InvalidArgument("dimension must be positive".into()));
    }
    for _ in 0..MAX_RESAMPLES {
        let a = uniform_matrix(rng, r, r);
        let rr = shifted_gram(rng, r);
        let s = shifted_gram(rng, r);
        let model = ModelTriple::new(a, rr, s)?;
        if validate(&model, tol).passed {
            return Ok(model);
        }
    }
    Err(RiccatiError::InvalidArgument(format!(
        "no valid model after {MAX_RESAMPLES} draws"
    )))
}

/// `KKᵀ` with `K` uniform in `[−1, 1]`, scaled by `scale`.
pub fn random_psd<R: Rng>(rng: &mut R, r: usize, scale: f64) -> Mat {
    let k = uniform_matrix(rng, r, r);
    symmetrize(&(&k * k.transpose() * scale))
}

/// `n` models of dimension `r` from one seed, in a fixed order.
pub fn model_batch(r: usize, n: usize, seed: u64, tol: &Tolerances) -> Result<Vec<ModelTriple>> {
    let mut g = rng(seed);
    (0..n).map(|_| random_model(&mut g, r, tol)).collect()
}

/// Model with `SA = AᵀS ≥ 0` and `S > 0`: in the variables `Ā = S^{1/2} A S^{−1/2}`
/// the drift is symmetric PSD, so draw `Ā = V diag(d) Vᵀ` with `d ≥ 0` and map back.
pub fn random_commuting_model<R: Rng>(rng: &mut R, r: usize, tol: &Tolerances) -> Result<ModelTriple> {
    for _ in 0..MAX_RESAMPLES {
        let s = shifted_gram(rng, r);
        let rr = shifted_gram(rng, r);
        let v = uniform_matrix(rng, r, r).qr().q();
        let d = Mat::from_diagonal(&nalgebra::DVector::from_fn(r, |_, _| rng.gen_range(0.0..=2.0)));
        let a_bar = symmetrize(&(&v * d * v.transpose()));
        let s_half = sqrt_psd(&s, tol)?;
        let s_inv_half = inv_sqrt_spd(&s, "S")?;
        let a = &s_inv_half * a_bar * &s_half;
        let model = ModelTriple::new(a, rr, s)?;
        if validate(&model, tol).passed {
            return Ok(model);
        }
    }
    Err(RiccatiError::InvalidArgument(format!(
        "no valid commuting model after {MAX_RESAMPLES} draws"
    )))
}
