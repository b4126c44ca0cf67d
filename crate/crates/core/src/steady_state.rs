//! Fixed points of the Riccati drift and the limiting observability Gramian.
//!
//! The stabilizing solution `P∞` comes from the stable invariant subspace of
//! the Hamiltonian `[[Aᵀ, −S], [−R, −A]]`, isolated with a reordered complex
//! Schur form. `S∞` solves `S∞B + BᵀS∞ + S = 0` by Schur back-substitution,
//! and `P∞⁻ = P∞ − S∞⁻¹`.

use nalgebra::Cholesky;

use crate::error::{Result, RiccatiError};
use crate::model::{drift_unchecked, ModelTriple};
use crate::spectral::{complex_schur, lambda_max, lambda_min, norm2, spectral_abscissa, symmetrize, to_complex, CMat, C64};
use crate::tolerance::Tolerances;
use crate::Mat;


const MAX_NEWTON_STEPS: usize = 3;

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub model: ModelTriple,
    pub p_inf: Mat,
    pub b: Mat,
    pub s_inf: Mat,
    pub p_inf_minus: Mat,
    pub care_residual: f64,
    pub minus_residual: f64,
    pub lyap_residual: f64,
    pub cond_s_inf: f64,
    pub warnings: Vec<String>,
    /// Tolerances the invariants were checked with; downstream checks reuse them.
    pub tol: Tolerances,
}

/// Swaps the adjacent diagonal entries `k` and `k+1` of the triangular
/// factor with a unitary rotation, updating `z` so that `Z T Z*` is unchanged.
fn swap_adjacent(t: &mut CMat, z: &mut CMat, k: usize) {
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let t12 = t[(k, k + 1)];
    // Eigenvector of the 2x2 block for t22.
    let v0 = t12;
    let v1 = t22 - t11;
    let nrm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return;
    }
    let (g00, g10) = (v0 / nrm, v1 / nrm);
    let (g01, g11) = (-g10.conj(), g00.conj());

    let n = t.ncols();
    // Rows: T[k..k+2, :] <- G* T[k..k+2, :]
    for j in 0..n {
        let a = t[(k, j)];
        let b = t[(k + 1, j)];
        t[(k, j)] = g00.conj() * a + g10.conj() * b;
        t[(k + 1, j)] = g01.conj() * a + g11.conj() * b;
    }
    // Columns: T[:, k..k+2] <- T[:, k..k+2] G, same for Z.
    for m in [&mut *t, &mut *z] {
        for i in 0..m.nrows() {
            let a = m[(i, k)];
            let b = m[(i, k + 1)];
            m[(i, k)] = a * g00 + b * g10;
            m[(i, k + 1)] = a * g01 + b * g11;
        }
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Moves every eigenvalue with negative real part to the leading block.
/// Returns the number of such eigenvalues.
fn order_stable_first(t: &mut CMat, z: &mut CMat) -> usize {
    let n = t.nrows();
    let mut head = 0;
    for j in 0..n {
        if t[(j, j)].re < 0.0 {
            for k in (head..j).rev() {
                swap_adjacent(t, z, k);
            }
            head += 1;
        }
    }
    head
}

/// Stabilizing solution of `AP + PAᵀ + R − PSP = 0` and `B = A − P S`.
pub fn solve_care(model: &ModelTriple, tol: &Tolerances) -> Result<(Mat, Mat)> {
    let r = model.dim;
    let mut h = Mat::zeros(2 * r, 2 * r);
    h.view_mut((0, 0), (r, r)).copy_from(&model.a.transpose());
    h.view_mut((0, r), (r, r)).copy_from(&(-&model.s));
    h.view_mut((r, 0), (r, r)).copy_from(&(-&model.r));
    h.view_mut((r, r), (r, r)).copy_from(&(-&model.a));

    let (mut z, mut t) = complex_schur(&to_complex(&h))?;
    // Hamiltonian eigenvalues come in ±λ pairs; ones on the imaginary axis
    // mean the hypotheses fail.
    let h_scale = norm2(&h).max(1.0);
    let axis = (0..2 * r)
        .map(|i| t[(i, i)].re.abs())
        .fold(f64::INFINITY, f64::min);
    let stable = order_stable_first(&mut t, &mut z);
    if stable != r || axis <= 1e3 * f64::EPSILON * h_scale {
        return Err(RiccatiError::NoStableSubspace {
            expected: r,
            found: stable,
        });
    }

    let u1 = z.view((0, 0), (r, r)).clone_owned();
    let u2 = z.view((r, 0), (r, r)).clone_owned();
    // P U1 = U2  <=>  U1ᵀ Pᵀ = U2ᵀ
    let pt = u1
        .transpose()
        .lu()
        .solve(&u2.transpose())
        .ok_or_else(|| RiccatiError::Singular {
            name: "U1".into(),
            condition: f64::INFINITY,
        })?;
    let p_complex = pt.transpose();
    let mut p = symmetrize(&p_complex.map(|c| c.re));

    let scale = norm2(&model.r).max(f64::MIN_POSITIVE);
    let threshold = tol.care_tol * scale;
    let mut residual = norm2(&drift_unchecked(model, &p));
    let mut steps = 0;
    while residual > threshold && steps < MAX_NEWTON_STEPS {
        // Newton step: (A − PS)Δ + Δ(A − PS)ᵀ + Λ(P) = 0.
        let bt = (&model.a - &p * &model.s).transpose();
        let delta = lyapunov_raw(&bt, &drift_unchecked(model, &p))?;
        p = symmetrize(&(p + delta));
        residual = norm2(&drift_unchecked(model, &p));
        steps += 1;
    }
    if residual > threshold {
        return Err(RiccatiError::Residual {
            what: "CARE".into(),
            residual,
            tolerance: threshold,
        });
    }
    let b = &model.a - &p * &model.s;
    let abscissa = spectral_abscissa(&b)?;
    if abscissa >= 0.0 {
        return Err(RiccatiError::NotHurwitz(abscissa));
    }
    Ok((p, b))
}

/// Solves `X B + Bᵀ X + C = 0` for Hurwitz `B` without a residual check.
fn lyapunov_raw(b: &Mat, c: &Mat) -> Result<Mat> {
    let n = b.nrows();
    let (z, t) = complex_schur(&to_complex(b))?;
    let max_re = (0..n).map(|i| t[(i, i)].re).fold(f64::NEG_INFINITY, f64::max);
    if max_re >= 0.0 {
        return Err(RiccatiError::NotHurwitz(max_re));
    }
    // With B = Z T Z*: Y T + T* Y + Z* C Z = 0, Y = Z* X Z.
    let ct = z.adjoint() * to_complex(c) * &z;
    let mut y = CMat::zeros(n, n);
    let tiny = f64::EPSILON * norm2(b).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..n {
            let mut acc = -ct[(i, j)];
            for k in 0..j {
                acc -= y[(i, k)] * t[(k, j)];
            }
            for k in 0..i {
                acc -= t[(k, i)].conj() * y[(k, j)];
            }
            let denom = t[(j, j)] + t[(i, i)].conj();
            if denom.norm() <= tiny {
                return Err(RiccatiError::Singular {
                    name: "Lyapunov operator".into(),
                    condition: f64::INFINITY,
                });
            }
            y[(i, j)] = acc / denom;
        }
    }
    let x = &z * y * z.adjoint();
    Ok(symmetrize(&x.map(|c| c.re)))
}

/// Solves `X B + Bᵀ X + S = 0` for Hurwitz `B`.
pub fn solve_lyapunov(b: &Mat, s: &Mat, tol: &Tolerances) -> Result<Mat> {
    if !b.is_square() || b.shape() != s.shape() {
        return Err(RiccatiError::DimensionMismatch(format!(
            "B is {:?}, S is {:?}",
            b.shape(),
            s.shape()
        )));
    }
    let x = lyapunov_raw(b, s)?;
    let residual = lyapunov_residual(&x, b, s);
    let threshold = tol.lyap_tol * norm2(s);
    if residual > threshold {
        return Err(RiccatiError::Residual {
            what: "Lyapunov".into(),
            residual,
            tolerance: threshold,
        });
    }
    Ok(x)
}

pub fn lyapunov_residual(x: &Mat, b: &Mat, s: &Mat) -> f64 {
    let xb = x * b;
    norm2(&(&xb + xb.transpose() + s))
}

/// `P∞ − S∞⁻¹` together with the condition number of `S∞`.
pub fn negative_fixed_point(p_inf: &Mat, s_inf: &Mat) -> Result<(Mat, f64)> {
    let n = s_inf.nrows();
    let lmin = lambda_min(s_inf);
    let lmax = lambda_max(s_inf);
    let cond = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    let chol = Cholesky::new(symmetrize(s_inf)).ok_or(RiccatiError::Singular {
        name: "S_inf".into(),
        condition: cond,
    })?;
    let s_inv = chol.solve(&Mat::identity(n, n));
    Ok((symmetrize(&(p_inf - s_inv)), cond))
}

/// Solves for `P∞`, `B`, `S∞`, `P∞⁻` and checks every fixed-point invariant.
pub fn steady_state(model: &ModelTriple, tol: &Tolerances) -> Result<SteadyState> {
    let (p_inf, b) = solve_care(model, tol).map_err(RiccatiError::at("care"))?;
    let s_inf = solve_lyapunov(&b, &model.s, tol).map_err(RiccatiError::at("lyapunov"))?;
    let s_min = lambda_min(&s_inf);
    if s_min <= 64.0 * f64::EPSILON * norm2(&s_inf) {
        return Err(RiccatiError::at("lyapunov")(RiccatiError::NotPositiveDefinite {
            name: "S_inf".into(),
            min_eigenvalue: s_min,
        }));
    }
    let (p_inf_minus, cond_s_inf) =
        negative_fixed_point(&p_inf, &s_inf).map_err(RiccatiError::at("negative_fixed_point"))?;

    let mut warnings = Vec::new();
    if cond_s_inf > 1e12 {
        warnings.push(format!("S_inf is ill-conditioned (cond = {cond_s_inf:.3e})"));
    }

    let scale = norm2(&model.r).max(f64::MIN_POSITIVE);
    let care_residual = norm2(&drift_unchecked(model, &p_inf));
    let minus_residual = norm2(&drift_unchecked(model, &p_inf_minus));
    let lyap_residual = lyapunov_residual(&s_inf, &b, &model.s);
    let check = |ok: bool, err: RiccatiError| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(RiccatiError::at("invariants")(err))
        }
    };
    check(
        minus_residual <= tol.care_tol * scale,
        RiccatiError::Residual {
            what: "negative fixed point".into(),
            residual: minus_residual,
            tolerance: tol.care_tol * scale,
        },
    )?;
    // S∞⁻¹ − P∞ = −P∞⁻, so this is also the Loewner gap P∞ < S∞⁻¹.
    let minus_max = lambda_max(&p_inf_minus);
    check(
        minus_max < 0.0,
        RiccatiError::NotPositiveDefinite {
            name: "-P_inf_minus".into(),
            min_eigenvalue: -minus_max,
        },
    )?;

    Ok(SteadyState {
        model: model.clone(),
        p_inf,
        b,
        s_inf,
        p_inf_minus,
        care_residual,
        minus_residual,
        lyap_residual,
        cond_s_inf,
        warnings,
        tol: *tol,
    })
}
