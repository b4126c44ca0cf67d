//! Dense matrix kernels: norms, spectral quantities, the matrix exponential
//! and symmetric square roots.

use nalgebra::{Cholesky, Complex, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiccatiError};
use crate::tolerance::Tolerances;
use crate::Mat;

pub(crate) type C64 = Complex<f64>;
pub(crate) type CMat = DMatrix<C64>;

const SCHUR_MAX_ITER: usize = 20_000;
/// Imaginary shifts, relative to `max(‖M‖₁, 1)`, tried when the plain QR
/// iteration stalls. Eigenvalues paired as `±λ` (Hamiltonians) can keep the
/// shift strategy from deflating; `M + iσI` breaks the pairing and has the
/// same Schur vectors.
const SCHUR_SHIFTS: [f64; 3] = [1e-2, 1e-1, 1e-3];
/// Looser deflation thresholds, the last resort.
const SCHUR_EPS_LADDER: [f64; 3] = [16.0 * f64::EPSILON, 256.0 * f64::EPSILON, 1e-12];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub spectral_norm: f64,
    pub log_norm: f64,
    pub spectral_abscissa: f64,
    pub min_eigenvalue_sym: f64,
}

pub fn summary(m: &Mat) -> Result<SpectralSummary> {
    Ok(SpectralSummary {
        spectral_norm: spectral_norm(m)?,
        log_norm: log_norm(m)?,
        spectral_abscissa: spectral_abscissa(m)?,
        min_eigenvalue_sym: lambda_min(&symmetrize(m)),
    })
}

pub(crate) fn ensure_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(RiccatiError::NonFinite(what.to_string()))
    }
}

pub(crate) fn ensure_square(m: &Mat, name: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(RiccatiError::NonSquare {
            name: name.to_string(),
            rows: m.nrows(),
            cols: m.ncols(),
        })
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat) -> Result<f64> {
    ensure_finite(m, "spectral_norm input")?;
    Ok(norm2(m))
}

/// Spectral norm without the finiteness check, for internal hot paths.
pub fn norm2(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Maximum absolute column sum.
pub fn norm1(m: &Mat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Logarithmic norm: largest eigenvalue of the symmetric part.
pub fn log_norm(m: &Mat) -> Result<f64> {
    ensure_finite(m, "log_norm input")?;
    ensure_square(m, "M")?;
    Ok(lambda_max(&symmetrize(m)))
}

pub(crate) fn to_complex(m: &Mat) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Complex Schur form `M = Z T Z*` with `T` upper triangular.
pub(crate) fn complex_schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    let scale = m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(1.0, f64::max);
    let attempt = |shift: f64, eps: f64| {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += C64::new(0.0, shift);
        }
        shifted.try_schur(eps, SCHUR_MAX_ITER).map(|s| {
            let (z, mut t) = s.unpack();
            for i in 0..n {
                t[(i, i)] -= C64::new(0.0, shift);
            }
            (z, t)
        })
    };
    let (z, mut t) = attempt(0.0, f64::EPSILON)
        .or_else(|| SCHUR_SHIFTS.iter().find_map(|&c| attempt(c * scale, f64::EPSILON)))
        .or_else(|| SCHUR_EPS_LADDER.iter().find_map(|&eps| attempt(0.0, eps)))
        .ok_or(RiccatiError::EigenFailure)?;
    // Clear the strictly lower part left over from deflation.
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((z, t))
}

/// Largest real part over the eigenvalues of `m`.
pub fn spectral_abscissa(m: &Mat) -> Result<f64> {
    ensure_finite(m, "spectral_abscissa input")?;
    ensure_square(m, "M")?;
    let eigenvalues: Vec<C64> = match m.clone().try_schur(f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => complex_schur(&to_complex(m))?.1.diagonal().iter().copied().collect(),
    };
    Ok(eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Largest entry of |M - M^T|.
pub fn asymmetry(m: &Mat) -> f64 {
    (m - m.transpose()).amax()
}

pub fn is_symmetric(m: &Mat, sym_tol: f64) -> bool {
    asymmetry(m) <= sym_tol * (1.0 + norm2(m))
}

/// Eigenvalues of the symmetric matrix `m` in ascending order.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn lambda_min(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn lambda_max(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Principal symmetric square root of a symmetric positive semi-definite
/// matrix. Negative eigenvalues within `psd_tol` are clamped to zero.
pub fn sqrt_psd(m: &Mat, tol: &Tolerances) -> Result<Mat> {
    ensure_finite(m, "sqrt_psd input")?;
    ensure_square(m, "M")?;
    let scale = norm2(m);
    let asym = asymmetry(m);
    if asym > tol.sym_tol * (1.0 + scale) {
        return Err(RiccatiError::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let min = eig.eigenvalues.min();
    if min < -tol.psd_tol * scale {
        return Err(RiccatiError::Indefinite(min));
    }
    let roots = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok(symmetrize(&root))
}

/// Symmetric inverse square root of a symmetric positive definite matrix.
pub(crate) fn inv_sqrt_spd(m: &Mat, name: &str) -> Result<Mat> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        return Err(RiccatiError::NotPositiveDefinite {
            name: name.to_string(),
            min_eigenvalue: min,
        });
    }
    let v = &eig.eigenvectors;
    let d = eig.eigenvalues.map(|x| 1.0 / x.sqrt());
    Ok(symmetrize(&(v * DMatrix::from_diagonal(&d) * v.transpose())))
}

/// Projects a nearly-PSD symmetric matrix onto the PSD cone when its
/// negative part is round-off (above `-threshold`); errors otherwise.
pub(crate) fn clamp_psd(m: &Mat, threshold: impl FnOnce() -> f64) -> Result<Mat> {
    let sym = symmetrize(m);
    // Positive definite inputs need no eigendecomposition.
    if Cholesky::new(sym.clone()).is_some() {
        return Ok(sym);
    }
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.min();
    if min >= 0.0 {
        return Ok(sym);
    }
    if min < -threshold() {
        return Err(RiccatiError::Indefinite(min));
    }
    let v = &eig.eigenvectors;
    let d = eig.eigenvalues.map(|x| x.max(0.0));
    Ok(symmetrize(&(v * DMatrix::from_diagonal(&d) * v.transpose())))
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Backward-error thresholds on the 1-norm for each Padé degree.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential `exp(t * m)` by scaling and squaring with a diagonal
/// Padé approximant whose degree is chosen from the 1-norm.
pub fn expm(m: &Mat, t: f64) -> Result<Mat> {
    ensure_finite(m, "expm input")?;
    ensure_square(m, "M")?;
    if !t.is_finite() {
        return Err(RiccatiError::NonFinite("expm time".into()));
    }
    let n = m.nrows();
    let a = m * t;
    let nrm = norm1(&a);
    if nrm == 0.0 {
        return Ok(Mat::identity(n, n));
    }

    let result = if nrm <= THETA3 {
        pade_low(&a, &PADE3)
    } else if nrm <= THETA5 {
        pade_low(&a, &PADE5)
    } else if nrm <= THETA7 {
        pade_low(&a, &PADE7)
    } else if nrm <= THETA9 {
        pade_low(&a, &PADE9)
    } else {
        let s = (nrm / THETA13).log2().ceil().max(0.0) as i32;
        let scaled = &a * 2f64.powi(-s);
        let Some(mut r) = pade13(&scaled) else {
            return Err(RiccatiError::Overflow(nrm));
        };
        for _ in 0..s {
            r = &r * &r;
            if !r.iter().all(|x| x.is_finite()) {
                return Err(RiccatiError::Overflow(nrm));
            }
        }
        Some(r)
    };
    match result {
        Some(r) if r.iter().all(|x| x.is_finite()) => Ok(r),
        _ => Err(RiccatiError::Overflow(nrm)),
    }
}

fn pade_low(a: &Mat, b: &[f64]) -> Option<Mat> {
    let n = a.nrows();
    let a2 = a * a;
    let mut pow = Mat::identity(n, n);
    let mut u = Mat::zeros(n, n);
    let mut v = Mat::zeros(n, n);
    for j in 0..b.len() / 2 {
        u += &pow * b[2 * j + 1];
        v += &pow * b[2 * j];
        pow = &pow * &a2;
    }
    let u = a * u;
    pade_solve(u, v)
}

fn pade13(a: &Mat) -> Option<Mat> {
    let b = &PADE13;
    let n = a.nrows();
    let id = Mat::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    pade_solve(u, v)
}

fn pade_solve(u: Mat, v: Mat) -> Option<Mat> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p)
}
