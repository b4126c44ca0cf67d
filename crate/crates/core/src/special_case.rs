//! Models with `S > 0` and `SA = AᵀS ≥ 0`, where the fixed points, the
//! transition matrix and the Gramian have closed forms in terms of
//! `(A² + RS)^{1/2}`.
//!
//! With `Ā = S^{1/2} A S^{−1/2}` (symmetric PSD) and `R̄ = S^{1/2} R S^{1/2}`,
//! `(A² + RS)^{1/2} = S^{−1/2} (Ā² + R̄)^{1/2} S^{1/2}`.

use nalgebra::{Cholesky, LU};
use serde::Serialize;

use crate::error::{Result, RiccatiError};
use crate::model::ModelTriple;
use crate::spectral::{asymmetry, expm, inv_sqrt_spd, lambda_min, norm2, sqrt_psd, symmetrize};
use crate::tolerance::Tolerances;
use crate::Mat;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// A model certified to satisfy the commuting hypotheses.
#[derive(Debug, Clone)]
pub struct CommutingModel {
    pub model: ModelTriple,
    pub witnesses: Vec<Witness>,
    tol: Tolerances,
}

/// Failed certification, with every witness so the caller sees what broke.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub witnesses: Vec<Witness>,
}

impl Rejection {
    pub fn failures(&self) -> impl Iterator<Item = &Witness> {
        self.witnesses.iter().filter(|w| !w.passed)
    }
}

pub fn commuting_check(model: &ModelTriple, tol: &Tolerances) -> std::result::Result<CommutingModel, Rejection> {
    let sa = &model.s * &model.a;
    let s_min = lambda_min(&model.s);
    let asym = asymmetry(&sa);
    let asym_tol = tol.sym_tol * (1.0 + norm2(&sa));
    let sa_min = lambda_min(&symmetrize(&sa));
    let witnesses = vec![
        Witness {
            name: "S_positive_definite",
            value: s_min,
            threshold: 0.0,
            passed: s_min > 0.0,
        },
        Witness {
            name: "SA_symmetric",
            value: asym,
            threshold: asym_tol,
            passed: asym <= asym_tol,
        },
        Witness {
            name: "SA_psd",
            value: sa_min,
            threshold: -tol.psd_tol,
            passed: sa_min >= -tol.psd_tol,
        },
    ];
    if witnesses.iter().all(|w| w.passed) {
        Ok(CommutingModel {
            model: model.clone(),
            witnesses,
            tol: *tol,
        })
    } else {
        Err(Rejection { witnesses })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFixedPoints {
    pub p_inf: Mat,
    pub p_inf_minus: Mat,
    pub b: Mat,
    /// `(A² + RS)^{1/2}`.
    pub root: Mat,
}

/// `X S⁻¹` through a Cholesky solve.
fn right_solve_s(cm: &CommutingModel, x: &Mat) -> Result<Mat> {
    let chol = Cholesky::new(symmetrize(&cm.model.s)).ok_or_else(|| RiccatiError::NotPositiveDefinite {
        name: "S".into(),
        min_eigenvalue: lambda_min(&cm.model.s),
    })?;
    Ok(chol.solve(&x.transpose()).transpose())
}

/// `(A² + RS)^{1/2}` with eigenvalues in the closed right half-plane.
pub fn root(cm: &CommutingModel) -> Result<Mat> {
    let m = &cm.model;
    let s_half = sqrt_psd(&m.s, &cm.tol)?;
    let s_inv_half = inv_sqrt_spd(&m.s, "S")?;
    let a2 = &m.a * &m.a;
    let inner = &s_half * (right_solve_s(cm, &a2)? + &m.r) * &s_half;
    let sym_root = sqrt_psd(&symmetrize(&inner), &cm.tol)?;
    Ok(s_inv_half * sym_root * s_half)
}

/// `P∞ = [A + (A²+RS)^{1/2}]S⁻¹`, `P∞⁻ = [A − (A²+RS)^{1/2}]S⁻¹`, `B = −(A²+RS)^{1/2}`.
pub fn closed_fixed_points(cm: &CommutingModel) -> Result<ClosedFixedPoints> {
    let root = root(cm)?;
    let a = &cm.model.a;
    Ok(ClosedFixedPoints {
        p_inf: symmetrize(&right_solve_s(cm, &(a + &root))?),
        p_inf_minus: symmetrize(&right_solve_s(cm, &(a - &root))?),
        b: -&root,
        root,
    })
}

/// `E_t(Q) = e^{tB}(P∞ − P∞⁻)[e^{2tB}(P∞ − P∞⁻) + (Q − P∞⁻)(I − e^{2tBᵀ})]⁻¹`.
///
/// `B` is only similar to a symmetric matrix here, and `S_t = (I − e^{2tBᵀ})(P∞ − P∞⁻)⁻¹`
/// needs the transpose in the last factor. When `A`, `R`, `S` share an
/// eigenbasis `B` is symmetric and the transpose is immaterial.
pub fn closed_transition(cm: &CommutingModel, fp: &ClosedFixedPoints, q: &Mat, t: f64) -> Result<Mat> {
    closed_transition_with(cm, fp, q, t, true)
}

/// The same formula with `(I − e^{2tB})` untransposed, valid only when `B = Bᵀ`.
pub fn closed_transition_untransposed(cm: &CommutingModel, fp: &ClosedFixedPoints, q: &Mat, t: f64) -> Result<Mat> {
    closed_transition_with(cm, fp, q, t, false)
}

fn closed_transition_with(cm: &CommutingModel, fp: &ClosedFixedPoints, q: &Mat, t: f64, transpose: bool) -> Result<Mat> {
    if !t.is_finite() || t < 0.0 {
        return Err(RiccatiError::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let r = cm.model.dim;
    let id = Mat::identity(r, r);
    let e1 = expm(&fp.b, t)?;
    let e2 = &e1 * &e1;
    let gap = &fp.p_inf - &fp.p_inf_minus;
    let k = &id - &e2;
    let k = if transpose { k.transpose() } else { k };
    let bracket = &e2 * &gap + (q - &fp.p_inf_minus) * k;
    let lhs = &e1 * &gap;
    // E · bracket = lhs  ⇔  bracketᵀ Eᵀ = lhsᵀ.
    let sol = LU::new(bracket.transpose())
        .solve(&lhs.transpose())
        .ok_or(RiccatiError::Singular {
            name: "closed-form bracket".into(),
            condition: f64::INFINITY,
        })?;
    Ok(sol.transpose())
}

/// `S_t = −½ S B⁻¹ (I − e^{2tB})`.
pub fn closed_gramian(cm: &CommutingModel, fp: &ClosedFixedPoints, t: f64) -> Result<Mat> {
    if !t.is_finite() || t < 0.0 {
        return Err(RiccatiError::InvalidArgument(format!("time must be nonnegative, got {t}")));
    }
    let r = cm.model.dim;
    let e2 = expm(&fp.b, 2.0 * t)?;
    let rhs = Mat::identity(r, r) - e2;
    let x = LU::new(fp.b.clone()).solve(&rhs).ok_or(RiccatiError::Singular {
        name: "B".into(),
        condition: f64::INFINITY,
    })?;
    Ok(symmetrize(&(&cm.model.s * x * -0.5)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `P∞ − P∞⁻ = −2BS⁻¹`, `B = −½(P∞ − P∞⁻)S`, and, in the transformed
/// variables, `P̄∞ = Ā + (Ā² + R̄)^{1/2}` for the supplied `P∞`.
pub fn structural_identities(
    cm: &CommutingModel,
    fp: &ClosedFixedPoints,
    p_inf: &Mat,
    tolerance: f64,
) -> Result<Vec<IdentityCheck>> {
    let m = &cm.model;
    let gap = &fp.p_inf - &fp.p_inf_minus;
    let mut out = Vec::new();
    let mut push = |name, residual: f64, scale: f64| {
        let tol = tolerance * (1.0 + scale);
        out.push(IdentityCheck {
            name,
            residual,
            tolerance: tol,
            passed: residual <= tol,
        })
    };

    let rhs = right_solve_s(cm, &(&fp.b * -2.0))?;
    push("gap_equals_minus_2_B_S_inv", norm2(&(&gap - &rhs)), norm2(&gap));
    let rhs = &gap * &m.s * -0.5;
    push("B_equals_minus_half_gap_S", norm2(&(&fp.b - &rhs)), norm2(&fp.b));

    let s_half = sqrt_psd(&m.s, &cm.tol)?;
    let s_inv_half = inv_sqrt_spd(&m.s, "S")?;
    let a_bar = &s_half * &m.a * &s_inv_half;
    let r_bar = symmetrize(&(&s_half * &m.r * &s_half));
    let p_bar = symmetrize(&(&s_half * p_inf * &s_half));
    let inner = symmetrize(&(&a_bar * &a_bar + r_bar));
    let expected = &a_bar + sqrt_psd(&inner, &cm.tol)?;
    push("transformed_fixed_point", norm2(&(&p_bar - &expected)), norm2(&p_bar));
    Ok(out)
}
