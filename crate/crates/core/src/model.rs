//! Problem data `(A, R, S)` and initial conditions, with hypothesis checks
//! and the Riccati drift `Λ(P) = AP + PAᵀ + R − PSP`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiccatiError};
use crate::spectral::{self, asymmetry, lambda_min, norm2, symmetrize};
use crate::tolerance::Tolerances;
use crate::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelTriple {
    pub dim: usize,
    pub a: Mat,
    pub r: Mat,
    pub s: Mat,
}

/// A symmetric positive semi-definite starting point for the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition(Mat);

impl InitialCondition {
    pub fn new(q: Mat, tol: &Tolerances) -> Result<Self> {
        spectral::ensure_square(&q, "Q")?;
        spectral::ensure_finite(&q, "Q")?;
        let scale = norm2(&q);
        let asym = asymmetry(&q);
        if asym > tol.sym_tol * (1.0 + scale) {
            return Err(RiccatiError::NotSymmetric(asym));
        }
        let q = symmetrize(&q);
        let min = lambda_min(&q);
        if min < -tol.psd_tol * scale {
            return Err(RiccatiError::Indefinite(min));
        }
        Ok(Self(q))
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }
}

/// Contents of a model file: the triple and an optional `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: ModelTriple,
    pub q: Option<Mat>,
}

impl ModelFile {
    pub fn require_q(&self) -> Result<&Mat> {
        self.q.as_ref().ok_or(RiccatiError::MissingInitialCondition)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawModel {
    dim: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    #[serde(rename = "S")]
    s: Vec<Vec<f64>>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<Vec<f64>>>,
}

/// Row-major nested vectors from a matrix.
pub fn matrix_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|row| row.iter().copied().collect()).collect()
}

/// Builds a matrix from rows, requiring a rectangular shape.
pub fn matrix_from_rows(name: &str, rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().position(|row| row.len() != ncols) {
        return Err(RiccatiError::DimensionMismatch(format!(
            "matrix `{name}` row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn square_of_dim(name: &str, rows: &[Vec<f64>], dim: usize) -> Result<Mat> {
    let m = matrix_from_rows(name, rows)?;
    spectral::ensure_square(&m, name)?;
    if m.nrows() != dim {
        return Err(RiccatiError::DimensionMismatch(format!(
            "matrix `{name}` is {0}x{0} but dim = {dim}",
            m.nrows()
        )));
    }
    spectral::ensure_finite(&m, name)?;
    Ok(m)
}

/// Parses a model document. Validation of the hypotheses is left to
/// [`validate`].
pub fn load_model(text: &str) -> Result<ModelFile> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| RiccatiError::Parse(e.to_string()))?;
    if raw.dim == 0 {
        return Err(RiccatiError::DimensionMismatch("dim must be positive".into()));
    }
    let model = ModelTriple {
        dim: raw.dim,
        a: square_of_dim("A", &raw.a, raw.dim)?,
        r: square_of_dim("R", &raw.r, raw.dim)?,
        s: square_of_dim("S", &raw.s, raw.dim)?,
    };
    let q = raw.q.as_deref().map(|q| square_of_dim("Q", q, raw.dim)).transpose()?;
    Ok(ModelFile { model, q })
}

pub fn load_model_path(path: impl AsRef<Path>) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    load_model(&text)
}

impl ModelTriple {
    pub fn new(a: Mat, r: Mat, s: Mat) -> Result<Self> {
        for (name, m) in [("A", &a), ("R", &r), ("S", &s)] {
            spectral::ensure_square(m, name)?;
            spectral::ensure_finite(m, name)?;
        }
        let dim = a.nrows();
        if r.nrows() != dim || s.nrows() != dim {
            return Err(RiccatiError::DimensionMismatch(format!(
                "A is {dim}x{dim}, R is {0}x{0}, S is {1}x{1}",
                r.nrows(),
                s.nrows()
            )));
        }
        Ok(Self { dim, a, r, s })
    }

    /// Scalar model `(a, r, s)`.
    pub fn scalar(a: f64, r: f64, s: f64) -> Self {
        Self {
            dim: 1,
            a: Mat::from_element(1, 1, a),
            r: Mat::from_element(1, 1, r),
            s: Mat::from_element(1, 1, s),
        }
    }

    /// JSON document in the model file format.
    pub fn to_json(&self, q: Option<&Mat>) -> String {
        let raw = RawModel {
            dim: self.dim,
            a: matrix_rows(&self.a),
            r: matrix_rows(&self.r),
            s: matrix_rows(&self.s),
            q: q.map(matrix_rows),
        };
        serde_json::to_string(&raw).expect("model serialization cannot fail")
    }

    fn check_dim(&self, m: &Mat, name: &str) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(RiccatiError::DimensionMismatch(format!(
                "{name} is {}x{}, model dimension is {}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// The Riccati drift `Λ(P) = AP + PAᵀ + R − PSP`, symmetrized.
pub fn riccati_drift(model: &ModelTriple, p: &Mat) -> Result<Mat> {
    model.check_dim(p, "P")?;
    Ok(drift_unchecked(model, p))
}

pub(crate) fn drift_unchecked(model: &ModelTriple, p: &Mat) -> Mat {
    let ap = &model.a * p;
    let psp = p * &model.s * p;
    let raw = &ap + ap.transpose() + &model.r - psp;
    symmetrize(&raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub name: String,
    pub passed: bool,
    /// Witness value (residual, eigenvalue or rank).
    pub value: f64,
    /// Threshold the witness was compared against.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn entry(&self, name: &str) -> Option<&ValidationEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

/// Symmetric root with negative eigenvalues dropped; used where the input
/// may already have failed the PSD check.
fn lenient_root(m: &Mat) -> Mat {
    let eig = nalgebra::SymmetricEigen::new(symmetrize(m));
    let d = eig.eigenvalues.map(|x| x.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// `[G, A G, …, A^{r−1} G]`.
pub fn kalman_matrix(a: &Mat, g: &Mat) -> Mat {
    let r = a.nrows();
    let k = g.ncols();
    let mut out = Mat::zeros(r, r * k);
    let mut block = g.clone();
    for i in 0..r {
        out.view_mut((0, i * k), (r, k)).copy_from(&block);
        block = a * block;
    }
    out
}

/// Numerical rank with threshold `rows·‖M‖·rank_tol`.
pub fn numerical_rank(m: &Mat, rank_tol: f64) -> usize {
    let sv = m.singular_values();
    let largest = sv.max();
    if largest == 0.0 {
        return 0;
    }
    let cut = m.nrows() as f64 * largest * rank_tol;
    sv.iter().filter(|&&x| x > cut).count()
}

/// Dimension of the Krylov space spanned by `G, AG, A²G, …`, built as an
/// orthonormal staircase. Each new block is `A` applied to the directions the
/// previous block added, so its scale stays near `‖A‖` and the rank cut does
/// not degrade with powers of `A` the way the explicit Kalman matrix does.
pub fn krylov_rank(a: &Mat, g: &Mat, rank_tol: f64) -> usize {
    let r = a.nrows();
    let mut basis = Mat::zeros(r, 0);
    let mut block = g.clone();
    while basis.ncols() < r && block.ncols() > 0 {
        let scale = block.norm().max(f64::MIN_POSITIVE);
        let mut w = block.clone();
        for _ in 0..2 {
            let proj = &basis * (basis.transpose() * &w);
            w -= proj;
        }
        let svd = w.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let cut = r as f64 * scale * rank_tol;
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > cut)
            .collect();
        if keep.is_empty() {
            break;
        }
        let fresh = u.select_columns(&keep);
        let n = basis.ncols();
        basis = basis.resize_horizontally(n + fresh.ncols(), 0.0);
        basis.view_mut((0, n), (r, fresh.ncols())).copy_from(&fresh);
        block = a * fresh;
    }
    basis.ncols().min(r)
}

pub fn validate(model: &ModelTriple, tol: &Tolerances) -> ValidationReport {
    let mut entries = Vec::new();
    for (name, m) in [("R", &model.r), ("S", &model.s)] {
        let scale = norm2(m);
        let asym = asymmetry(m);
        let sym_thresh = tol.sym_tol * (1.0 + scale);
        entries.push(ValidationEntry {
            name: format!("symmetry_{name}"),
            passed: asym <= sym_thresh,
            value: asym,
            threshold: sym_thresh,
        });
        let min = lambda_min(&symmetrize(m));
        let psd_thresh = -tol.psd_tol * scale;
        entries.push(ValidationEntry {
            name: format!("psd_{name}"),
            passed: min >= psd_thresh,
            value: min,
            threshold: psd_thresh,
        });
    }

    let r = model.dim;
    let ctrl = krylov_rank(&model.a, &lenient_root(&model.r), tol.rank_tol);
    entries.push(ValidationEntry {
        name: "controllability_rank".into(),
        passed: ctrl == r,
        value: ctrl as f64,
        threshold: r as f64,
    });
    let obs = krylov_rank(&model.a.transpose(), &lenient_root(&model.s), tol.rank_tol);
    entries.push(ValidationEntry {
        name: "observability_rank".into(),
        passed: obs == r,
        value: obs as f64,
        threshold: r as f64,
    });

    let passed = entries.iter().all(|e| e.passed);
    ValidationReport { entries, passed }
}
