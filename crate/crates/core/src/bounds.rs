//! Explicit contraction constants for `C_t(Q)⁻¹` and `E_t(Q)`, the
//! exponential envelopes of `e^{tB}`, and checks of every inequality against
//! closed-form trajectories.

use std::sync::LazyLock;

use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiccatiError};
use crate::floquet::{factors_on_grid, flow_from_factor, FloquetFactor};
use crate::gramian::{check_grid, gramian_at};
use crate::spectral::{lambda_max, lambda_min, log_norm, norm2, spectral_abscissa, symmetrize};
use crate::steady_state::SteadyState;
use crate::Mat;

pub const DEFAULT_GAMMA: f64 = 0.5;

/// `χ(Q) = ‖(P∞⁻)⁻¹‖ (‖P∞ − P∞⁻‖ + ‖Q − P∞‖)`, where
/// `‖(P∞⁻)⁻¹‖ = 1/λ_min(−P∞⁻)`.
///
/// Using `1/‖P∞⁻‖ = 1/λ_max(−P∞⁻)` instead is not a bound once `P∞⁻` has
/// spread eigenvalues; see `reciprocal_norm_reading_fails`.
pub fn chi(steady: &SteadyState, q: &Mat) -> f64 {
    let gap = norm2(&(&steady.p_inf - &steady.p_inf_minus)) + norm2(&(q - &steady.p_inf));
    gap / lambda_min(&-&steady.p_inf_minus)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(RiccatiError::InvalidArgument(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    Ok(())
}

/// `χ_δ = [λ_min(S_δ) λ_min(−P∞⁻)]⁻¹`.
pub fn chi_delta(steady: &SteadyState, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let s_delta = gramian_at(&steady.b, &steady.model.s, delta)?.s_t;
    Ok(1.0 / (lambda_min(&s_delta) * lambda_min(&-&steady.p_inf_minus)))
}

fn spd_inverse(m: &Mat, name: &str) -> Result<Mat> {
    let n = m.nrows();
    let chol = Cholesky::new(symmetrize(m)).ok_or_else(|| RiccatiError::NotPositiveDefinite {
        name: name.into(),
        min_eigenvalue: lambda_min(m),
    })?;
    Ok(symmetrize(&chol.solve(&Mat::identity(n, n))))
}

/// Bound on `‖C_t(Q)⁻¹‖` valid for `t ≥ δ`:
/// `[λ_min(S_δ) λ_min(S_t⁻¹ − S∞⁻¹ − P∞⁻)]⁻¹`.
pub fn lemma_bound_late(steady: &SteadyState, s_delta: &Mat, s_t: &Mat) -> Result<f64> {
    let s_inf_inv = spd_inverse(&steady.s_inf, "S_inf")?;
    let inner = spd_inverse(s_t, "S_t")? - s_inf_inv - &steady.p_inf_minus;
    Ok(1.0 / (lambda_min(s_delta) * lambda_min(&symmetrize(&inner))))
}

/// Bound on `‖C_t(Q)⁻¹‖` valid for `t ≤ δ`:
/// `1 + ‖Q − P∞‖ / λ_min(S_δ⁻¹ − S∞⁻¹ − P∞⁻)`.
pub fn lemma_bound_early(steady: &SteadyState, s_delta: &Mat, q: &Mat) -> Result<f64> {
    let s_inf_inv = spd_inverse(&steady.s_inf, "S_inf")?;
    let inner = spd_inverse(s_delta, "S_delta")? - s_inf_inv - &steady.p_inf_minus;
    Ok(1.0 + norm2(&(q - &steady.p_inf)) / lambda_min(&symmetrize(&inner)))
}

/// `‖e^{tB}‖ ≤ α e^{−βt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub name: &'static str,
    pub alpha: f64,
    pub beta: f64,
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        self.alpha * (-self.beta * t).exp()
    }

    /// `∫₀^∞ α e^{−βt} dt`, the figure of merit used to pick an envelope.
    pub fn area(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// A way of bounding `‖e^{tB}‖` by an exponential. Returns `None` when the
/// construction does not apply to `B`.
pub trait EnvelopeStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn envelope(&self, b: &Mat, gamma: f64) -> Result<Option<Envelope>>;
}

/// Coppel: `α = (a/γ)^{r−1}`, `β = −(1−γ)ς(B)`, `a = 2‖B‖/|ς(B)|`.
pub struct Coppel;

impl EnvelopeStrategy for Coppel {
    fn name(&self) -> &'static str {
        "coppel"
    }

    fn envelope(&self, b: &Mat, gamma: f64) -> Result<Option<Envelope>> {
        let abscissa = spectral_abscissa(b)?;
        let a = 2.0 * norm2(b) / abscissa.abs();
        Ok(Some(Envelope {
            name: self.name(),
            alpha: (a / gamma).powi(b.nrows() as i32 - 1),
            beta: -(1.0 - gamma) * abscissa,
        }))
    }
}

/// `α = 1`, `β = −μ(B)`, available when the log-norm is negative.
pub struct LogNorm;

impl EnvelopeStrategy for LogNorm {
    fn name(&self) -> &'static str {
        "lognorm"
    }

    fn envelope(&self, b: &Mat, _gamma: f64) -> Result<Option<Envelope>> {
        let mu = log_norm(b)?;
        Ok((mu < 0.0).then_some(Envelope {
            name: self.name(),
            alpha: 1.0,
            beta: -mu,
        }))
    }
}

static ENVELOPES: LazyLock<Vec<Box<dyn EnvelopeStrategy>>> =
    LazyLock::new(|| vec![Box::new(LogNorm), Box::new(Coppel)]);

pub fn envelope_strategies() -> &'static [Box<dyn EnvelopeStrategy>] {
    &ENVELOPES
}

pub fn envelope_strategy(name: &str) -> Option<&'static dyn EnvelopeStrategy> {
    ENVELOPES.iter().find(|s| s.name() == name).map(|s| s.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeChoice {
    pub gamma: f64,
    /// `2‖B‖/|ς(B)|`.
    pub a: f64,
    pub candidates: Vec<Envelope>,
    pub selected: Envelope,
}

impl EnvelopeChoice {
    pub fn candidate(&self, name: &str) -> Option<&Envelope> {
        self.candidates.iter().find(|e| e.name == name)
    }
}

/// Every applicable envelope for `B`, with the one of smallest `α/β`
/// selected (earlier registry entries win ties).
pub fn coppel_envelope(b: &Mat, gamma: f64) -> Result<EnvelopeChoice> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(RiccatiError::InvalidArgument(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    let abscissa = spectral_abscissa(b)?;
    if abscissa >= 0.0 {
        return Err(RiccatiError::NotHurwitz(abscissa));
    }
    let mut candidates = Vec::new();
    for s in envelope_strategies() {
        if let Some(e) = s.envelope(b, gamma)? {
            candidates.push(e);
        }
    }
    let selected = *candidates
        .iter()
        .reduce(|best, e| if e.area() < best.area() { e } else { best })
        .expect("the Coppel envelope always applies to a Hurwitz matrix");
    Ok(EnvelopeChoice {
        gamma,
        a: 2.0 * norm2(b) / abscissa.abs(),
        candidates,
        selected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionConstants {
    pub chi_phi_delta: f64,
    #[serde(rename = "chi_E_delta")]
    pub chi_e_delta: f64,
    pub chi_phi_pair: f64,
    #[serde(rename = "chi_E_pair")]
    pub chi_e_pair: f64,
}

/// `χ_{φ,δ} = χ_δ²`, `χ_φ(Q1,Q2) = χ(Q1)χ(Q2)` and the `E` versions scaled by `‖S∞‖`.
pub fn contraction_constants(steady: &SteadyState, delta: f64, q1: &Mat, q2: &Mat) -> Result<ContractionConstants> {
    let cd = chi_delta(steady, delta)?;
    let s_norm = norm2(&steady.s_inf);
    let chi_phi_delta = cd * cd;
    let chi_phi_pair = chi(steady, q1) * chi(steady, q2);
    Ok(ContractionConstants {
        chi_phi_delta,
        chi_e_delta: s_norm * chi_phi_delta,
        chi_phi_pair,
        chi_e_pair: s_norm * chi_phi_pair,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `‖E_t(Q)‖ ≤ χ(Q)‖e^{tB}‖`.
    TransitionChi,
    /// `‖E_t(Q)‖ ≤ χ_δ‖e^{tB}‖`, `t ≥ δ`.
    TransitionChiDelta,
    /// `‖C_t(Q)⁻¹‖ ≤ χ(Q)`.
    InverseChi,
    /// Refined estimate on `‖C_t(Q)⁻¹‖` for `t ≥ δ`.
    LemmaLate,
    /// Refined estimate on `‖C_t(Q)⁻¹‖` for `t ≤ δ`.
    LemmaEarly,
    /// `‖φ_t(Q1) − φ_t(Q2)‖ ≤ χ_φ(Q1,Q2)‖e^{tB}‖²‖Q1 − Q2‖`.
    FlowLipschitz,
    /// `‖E_t(Q1) − E_t(Q2)‖ ≤ χ_E(Q1,Q2)‖e^{tB}‖‖Q1 − Q2‖`.
    TransitionLipschitz,
    /// `‖φ_t(Q1) − φ_t(Q2)‖ ≤ χ_{φ,δ}‖e^{tB}‖²‖Q1 − Q2‖`, `t ≥ δ`.
    FlowLipschitzDelta,
    /// `‖E_t(Q1) − E_t(Q2)‖ ≤ χ_{E,δ}‖e^{tB}‖‖Q1 − Q2‖`, `t ≥ δ`.
    TransitionLipschitzDelta,
    /// `‖e^{tB}‖ ≤ α e^{−βt}` for the selected envelope.
    Envelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeCheck {
    pub kind: CheckKind,
    pub t: f64,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    #[serde(rename = "chi_Q")]
    pub chi_q: f64,
    #[serde(rename = "chi_Q2")]
    pub chi_q2: f64,
    pub chi_delta: f64,
    pub delta: f64,
    pub coppel_alpha: f64,
    pub coppel_beta: f64,
    pub coppel_gamma: f64,
    pub coppel_a: f64,
    pub envelope: Envelope,
    #[serde(flatten)]
    pub constants: ContractionConstants,
    /// Smallest and largest eigenvalue of `φ_t(Q1)` over the grid.
    pub flow_min_eigenvalue: f64,
    pub flow_max_eigenvalue: f64,
    pub envelope_checks: Vec<EnvelopeCheck>,
    pub passed: bool,
}

impl BoundsReport {
    pub fn failures(&self) -> impl Iterator<Item = &EnvelopeCheck> {
        self.envelope_checks.iter().filter(|c| !c.pass)
    }

    pub fn checks_of(&self, kind: CheckKind) -> impl Iterator<Item = &EnvelopeCheck> {
        self.envelope_checks.iter().filter(move |c| c.kind == kind)
    }
}

/// Evaluates every `CheckKind` inequality on each grid point: the transition
/// and inverse-factor envelopes, the pair contractions, both branches of the
/// inverse estimate and the selected exponential envelope. Violations are recorded, not
/// raised.
pub fn verify_envelopes(
    steady: &SteadyState,
    q1: &Mat,
    q2: &Mat,
    grid: &[f64],
    delta: f64,
    gamma: f64,
) -> Result<BoundsReport> {
    check_delta(delta)?;
    check_grid(grid)?;
    let slack = 1.0 + steady.tol.check_tol;
    let chi_q = chi(steady, q1);
    let chi_q2 = chi(steady, q2);
    let chi_d = chi_delta(steady, delta)?;
    let constants = contraction_constants(steady, delta, q1, q2)?;
    let choice = coppel_envelope(&steady.b, gamma)?;
    let coppel = *choice.candidate("coppel").expect("coppel is registered");
    let s_delta = gramian_at(&steady.b, &steady.model.s, delta)?.s_t;
    let early = lemma_bound_early(steady, &s_delta, q1)?;

    let f1 = factors_on_grid(steady, q1, grid)?;
    let f2 = factors_on_grid(steady, q2, grid)?;
    let dq = norm2(&(q1 - q2));

    let per_point = f1
        .par_iter()
        .zip(f2.par_iter())
        .map(|(a, b)| -> Result<(Vec<EnvelopeCheck>, f64, f64)> {
            let t = a.t;
            let exp_norm = norm2(&a.exp_tb);
            let mut out = Vec::with_capacity(10);
            let mut push = |kind, observed: f64, bound: f64| {
                out.push(EnvelopeCheck {
                    kind,
                    t,
                    observed,
                    bound,
                    pass: observed <= bound * slack,
                })
            };
            let e_norm = norm2(&a.e);
            let inv_norm = norm2(&a.c_inv);
            push(CheckKind::TransitionChi, e_norm, chi_q * exp_norm);
            push(CheckKind::InverseChi, inv_norm, chi_q);
            if t >= delta {
                push(CheckKind::TransitionChiDelta, e_norm, chi_d * exp_norm);
                push(CheckKind::LemmaLate, inv_norm, lemma_bound_late(steady, &s_delta, &a.s_t)?);
            }
            if t <= delta {
                push(CheckKind::LemmaEarly, inv_norm, early);
            }
            let (dphi, de) = pair_differences(a, b);
            push(CheckKind::FlowLipschitz, dphi, constants.chi_phi_pair * exp_norm * exp_norm * dq);
            push(CheckKind::TransitionLipschitz, de, constants.chi_e_pair * exp_norm * dq);
            if t >= delta {
                push(CheckKind::FlowLipschitzDelta, dphi, constants.chi_phi_delta * exp_norm * exp_norm * dq);
                push(CheckKind::TransitionLipschitzDelta, de, constants.chi_e_delta * exp_norm * dq);
            }
            push(CheckKind::Envelope, exp_norm, choice.selected.at(t));
            let phi = flow_from_factor(steady, a)?;
            Ok((out, lambda_min(&phi), lambda_max(&phi)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut envelope_checks = Vec::new();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (checks, mn, mx) in per_point {
        envelope_checks.extend(checks);
        lo = lo.min(mn);
        hi = hi.max(mx);
    }
    let passed = envelope_checks.iter().all(|c| c.pass);
    Ok(BoundsReport {
        chi_q,
        chi_q2,
        chi_delta: chi_d,
        delta,
        coppel_alpha: coppel.alpha,
        coppel_beta: coppel.beta,
        coppel_gamma: gamma,
        coppel_a: choice.a,
        envelope: choice.selected,
        constants,
        flow_min_eigenvalue: lo,
        flow_max_eigenvalue: hi,
        envelope_checks,
        passed,
    })
}

/// `‖φ_t(Q1) − φ_t(Q2)‖` and `‖E_t(Q1) − E_t(Q2)‖` through the factored
/// difference formulas.
fn pair_differences(a: &FloquetFactor, b: &FloquetFactor) -> (f64, f64) {
    let dq = &a.q - &b.q;
    let dphi = &a.e * &dq * b.e.transpose();
    let de = -(&a.e * &dq * &a.s_t * &b.c_inv);
    (norm2(&dphi), norm2(&de))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Smallest `c` with `χ_φ ∨ χ_E ≤ c(1 + ‖Q1‖² + ‖Q2‖²)` over the sample.
    pub c: f64,
    /// `c(1 + ‖Q1‖² + ‖Q2‖²) − χ_φ ∨ χ_E` for each pair; all nonnegative.
    pub margins: Vec<f64>,
}

pub fn quadratic_growth_check(steady: &SteadyState, pairs: &[(Mat, Mat)]) -> Result<GrowthReport> {
    if pairs.is_empty() {
        return Err(RiccatiError::InvalidArgument("empty sample".into()));
    }
    let s_norm = norm2(&steady.s_inf);
    let rows: Vec<(f64, f64)> = pairs
        .iter()
        .map(|(q1, q2)| {
            let chi_phi = chi(steady, q1) * chi(steady, q2);
            let worst = chi_phi.max(s_norm * chi_phi);
            let weight = 1.0 + norm2(q1).powi(2) + norm2(q2).powi(2);
            (worst, weight)
        })
        .collect();
    let c = rows.iter().map(|(w, d)| w / d).fold(0.0, f64::max);
    let margins = rows.iter().map(|(w, d)| c * d - w).collect();
    Ok(GrowthReport { c, margins })
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

    fn decoupled() -> SteadyState {
        let id = Mat::identity(2, 2);
        steady_state(&ModelTriple::new(Mat::zeros(2, 2), id.clone(), id).unwrap(), &Tolerances::default()).unwrap()
    }

    fn m1(x: f64) -> Mat {
        Mat::from_element(1, 1, x)
    }

    #[test]
    fn chi_examples() {
        let st = scalar();
        assert_relative_eq!(chi(&st, &m1(0.0)), 3.0, epsilon = 1e-10);
        assert_relative_eq!(chi(&st, &st.p_inf), 2.0, epsilon = 1e-10);
        assert_relative_eq!(chi(&decoupled(), &Mat::zeros(2, 2)), 3.0, epsilon = 1e-10);
    }

    #[test]
    fn reciprocal_norm_reading_fails() {
        let tol = Tolerances::default();
        let mut g = crate::random::rng(11);
        let grid: Vec<f64> = (0..11).map(|k| 0.01 * 2f64.powi(k)).collect();
        let mut worst: f64 = 0.0;
        for k in 0..20 {
            let r = 2 + k % 7;
            let st = steady_state(&crate::random::random_model(&mut g, r, &tol).unwrap(), &tol).unwrap();
            let q = crate::random::random_psd(&mut g, r, 1.0);
            let literal = (norm2(&(&st.p_inf - &st.p_inf_minus)) + norm2(&(&q - &st.p_inf)))
                / norm2(&st.p_inf_minus);
            let chi_q = chi(&st, &q);
            for f in factors_on_grid(&st, &q, &grid).unwrap() {
                let n = norm2(&f.c_inv);
                assert!(n <= chi_q);
                worst = worst.max(n / literal);
            }
        }
        assert!(worst > 1.0, "{worst}");
    }

    #[test]
    fn chi_delta_examples() {
        let st = scalar();
        assert_relative_eq!(chi_delta(&st, 1.0).unwrap(), 2.3130352854993315, epsilon = 1e-10);
        assert_relative_eq!(chi_delta(&st, 40.0).unwrap(), 2.0, epsilon = 1e-10);
        assert_relative_eq!(chi_delta(&decoupled(), 1.0).unwrap(), 2.3130352854993315, epsilon = 1e-10);
        assert!(chi_delta(&st, 0.0).is_err());
        assert!(chi_delta(&st, -1.0).is_err());
    }

    #[test]
    fn chi_delta_is_non_increasing() {
        let st = decoupled();
        let vals: Vec<f64> = [0.1, 0.5, 1.0, 2.0, 8.0].iter().map(|&d| chi_delta(&st, d).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn envelope_examples() {
        let c = coppel_envelope(&m1(-1.0), 0.5).unwrap();
        let coppel = c.candidate("coppel").unwrap();
        assert_relative_eq!(coppel.alpha, 1.0);
        assert_relative_eq!(coppel.beta, 0.5);
        assert_eq!(c.selected.name, "lognorm");
        assert_relative_eq!(c.selected.beta, 1.0);

        let c = coppel_envelope(&-Mat::identity(2, 2), 0.5).unwrap();
        assert_relative_eq!(c.a, 2.0);
        assert_relative_eq!(c.candidate("coppel").unwrap().alpha, 4.0);
        assert_relative_eq!(c.candidate("coppel").unwrap().beta, 0.5);
        assert_eq!(c.selected, Envelope { name: "lognorm", alpha: 1.0, beta: 1.0 });

        assert!(coppel_envelope(&m1(-1.0), 0.0).is_err());
        assert!(coppel_envelope(&m1(-1.0), 1.0).is_err());
        assert!(coppel_envelope(&m1(1.0), 0.5).is_err());
    }

    #[test]
    fn non_normal_matrix_selects_coppel() {
        // μ(B) > 0 here, so only Coppel applies.
        let b = nalgebra::dmatrix![-1.0, 10.0; 0.0, -1.0];
        let c = coppel_envelope(&b, 0.5).unwrap();
        assert!(c.candidate("lognorm").is_none());
        assert_eq!(c.selected.name, "coppel");
        for k in 0..200 {
            let t = 0.05 * k as f64;
            assert!(norm2(&crate::spectral::expm(&b, t).unwrap()) <= c.selected.at(t));
        }
    }

    #[test]
    fn registry_lookup() {
        assert_eq!(envelope_strategy("coppel").unwrap().name(), "coppel");
        assert!(envelope_strategy("nope").is_none());
        let names: Vec<_> = envelope_strategies().iter().map(|s| s.name()).collect();
        assert_eq!(names, ["lognorm", "coppel"]);
    }

    #[test]
    fn contraction_examples() {
        let st = scalar();
        let k = contraction_constants(&st, 1.0, &m1(0.0), &m1(0.0)).unwrap();
        assert_relative_eq!(k.chi_phi_delta, 5.350132227, epsilon = 1e-8);
        assert_relative_eq!(k.chi_phi_pair, 9.0, epsilon = 1e-9);
        assert_relative_eq!(k.chi_e_delta, 2.6750661135, epsilon = 1e-8);
        assert_relative_eq!(k.chi_e_pair, 4.5, epsilon = 1e-9);
        let k = contraction_constants(&st, 1.0, &st.p_inf, &st.p_inf).unwrap();
        assert_relative_eq!(k.chi_phi_pair, 4.0, epsilon = 1e-9);
        let k = contraction_constants(&st, 60.0, &m1(0.0), &m1(0.0)).unwrap();
        assert_relative_eq!(k.chi_phi_delta, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn scalar_report_passes() {
        let st = scalar();
        let grid: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
        let rep = verify_envelopes(&st, &m1(0.0), &m1(0.0), &grid, 1.0, DEFAULT_GAMMA).unwrap();
        assert!(rep.passed, "{:?}", rep.failures().collect::<Vec<_>>());
        let at1 = rep
            .checks_of(CheckKind::TransitionChi)
            .find(|c| (c.t - 1.0).abs() < 1e-12)
            .unwrap();
        assert_relative_eq!(at1.observed, 0.6480542736638855, epsilon = 1e-12);
        assert_relative_eq!(at1.bound, 3.0 * (-1f64).exp(), epsilon = 1e-10);
        for c in rep.checks_of(CheckKind::FlowLipschitz) {
            assert_eq!(c.observed, 0.0);
        }
    }

    #[test]
    fn fixed_point_ratio_is_reciprocal_chi() {
        let st = scalar();
        let grid = [0.5, 1.0, 3.0];
        let rep = verify_envelopes(&st, &st.p_inf, &st.p_inf, &grid, 1.0, DEFAULT_GAMMA).unwrap();
        for c in rep.checks_of(CheckKind::TransitionChi) {
            assert_relative_eq!(c.observed / c.bound, 0.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn growth_examples() {
        let st = scalar();
        let pairs: Vec<(Mat, Mat)> = [0.0, 1.0, 2.0].iter().map(|&q| (m1(q), m1(q))).collect();
        let g = quadratic_growth_check(&st, &pairs).unwrap();
        let expected = pairs
            .iter()
            .map(|(a, _)| chi(&st, a).powi(2) / (1.0 + 2.0 * a[(0, 0)].powi(2)))
            .fold(0.0, f64::max);
        assert_relative_eq!(g.c, expected, epsilon = 1e-12);
        assert!(g.margins.iter().all(|&m| m >= 0.0));

        let g = quadratic_growth_check(&st, &[(st.p_inf.clone(), st.p_inf.clone())]).unwrap();
        assert_relative_eq!(g.c, 4.0 / 3.0, epsilon = 1e-9);

        assert!(quadratic_growth_check(&st, &[]).is_err());
    }

    #[test]
    fn growth_is_quadratic() {
        let st = scalar();
        let chi_phi = |q: f64| chi(&st, &m1(q)).powi(2);
        let ratio = chi_phi(2000.0) / chi_phi(1000.0);
        assert!(ratio <= 4.0 + 1e-2, "{ratio}");
    }
}
