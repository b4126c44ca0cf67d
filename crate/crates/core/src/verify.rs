//! Invariant suite: closed form against the oracle, differential and
//! semigroup identities, the implicit-solution integral, envelopes and
//! Gramian properties. Every check is recorded with its value and threshold.

use serde::Serialize;

use crate::bounds::{self, CheckKind};
use crate::error::Result;
use crate::floquet::{c_matrix, e_difference, flow, flow_difference, frechet_derivative, transition, transition_two_time};
use crate::gramian::{gramian_at, gramian_curve, mono_threshold, monotonicity_margins};
use crate::model::ModelTriple;
use crate::oracle::quadrature::{self, QuadratureConfig};
use crate::oracle::{self, IntegratorConfig};
use crate::spectral::{lambda_max, lambda_min, norm2, spectral_abscissa, symmetrize};
use crate::steady_state::{steady_state, SteadyState};
use crate::tolerance::Tolerances;
use crate::Mat;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="` or `">"`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: "<=",
            passed: value <= threshold,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: ">",
            passed: value > threshold,
        }
    }
}

/// `‖X − Y‖ / (1 + ‖Y‖)`.
pub fn relative_gap(x: &Mat, y: &Mat) -> f64 {
    norm2(&(x - y)) / (1.0 + norm2(y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub times: Vec<f64>,
    pub oracle_tol: f64,
    pub ode_times: Vec<f64>,
    pub ode_tol: f64,
    pub semigroup_times: Vec<f64>,
    pub semigroup_tol: f64,
    pub implicit_t: f64,
    pub implicit_tol: f64,
    pub fd_step: f64,
    pub fd_tol: f64,
    pub difference_tol: f64,
    pub envelope_grid: Vec<f64>,
    pub delta: f64,
    pub gamma: f64,
    pub gramian_limit_tol: f64,
    pub integrator: IntegratorConfig,
}

/// `0.01·2^k` up to `t_max`.
pub fn doubling_grid(t_max: f64) -> Vec<f64> {
    (0..)
        .map(|k| 0.01 * 2f64.powi(k))
        .take_while(|&t| t <= t_max)
        .collect()
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            times: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0],
            oracle_tol: 1e-6,
            ode_times: vec![0.5, 2.0],
            ode_tol: 1e-4,
            semigroup_times: vec![0.3, 1.7],
            semigroup_tol: 1e-9,
            implicit_t: 2.0,
            implicit_tol: 1e-6,
            fd_step: 1e-5,
            fd_tol: 1e-4,
            difference_tol: 1e-8,
            envelope_grid: doubling_grid(20.0),
            delta: 0.5,
            gamma: bounds::DEFAULT_GAMMA,
            gramian_limit_tol: 1e-8,
            integrator: IntegratorConfig::default(),
        }
    }
}

/// Fixed-point residuals, stability of `B`, sign of `P∞⁻` and `S∞⁻¹ > P∞`.
pub fn fixed_point_checks(steady: &SteadyState) -> Vec<Check> {
    let tol = &steady.tol;
    let r_scale = tol.care_tol * norm2(&steady.model.r);
    let abscissa = spectral_abscissa(&steady.b).unwrap_or(f64::NAN);
    let s_inf_inv = steady
        .s_inf
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| Mat::from_element(steady.model.dim, steady.model.dim, f64::NAN));
    vec![
        Check::at_most("care_residual", steady.care_residual, r_scale),
        Check::at_most("minus_residual", steady.minus_residual, r_scale),
        Check::at_most("B_spectral_abscissa", abscissa, 0.0).strict(),
        Check::at_most("P_inf_minus_lambda_max", lambda_max(&steady.p_inf_minus), 0.0).strict(),
        Check::above("S_inf_inv_minus_P_inf_lambda_min", lambda_min(&symmetrize(&(s_inf_inv - &steady.p_inf))), 0.0),
    ]
}

impl Check {
    /// Turns `<=` into `<`.
    fn strict(mut self) -> Self {
        self.relation = "<";
        self.passed = self.value < self.threshold;
        self
    }
}

/// Closed-form `E_t(Q)` and `φ_t(Q)` against one joint oracle integration.
/// Also checks that the oracle kept `P` PSD on every accepted step.
pub fn oracle_checks(steady: &SteadyState, q: &Mat, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut integ = cfg.integrator.clone();
    integ.track_psd = true;
    let (traj, stats) = oracle::integrate_joint(&steady.model, q, &cfg.times, &integ)?;
    let transitions = traj.transitions.expect("joint integration records transitions");
    let mut out = Vec::new();
    let mut scale: f64 = norm2(q);
    for (k, &t) in cfg.times.iter().enumerate() {
        let f = c_matrix(steady, q, t)?;
        let phi = crate::floquet::flow_from_factor(steady, &f)?;
        scale = scale.max(norm2(&phi));
        out.push(Check::at_most(
            format!("oracle_transition_t={t}"),
            relative_gap(&f.e, &transitions[k]),
            cfg.oracle_tol,
        ));
        out.push(Check::at_most(
            format!("oracle_flow_t={t}"),
            relative_gap(&phi, &traj.values[k]),
            cfg.oracle_tol,
        ));
    }
    out.push(Check::at_most(
        "oracle_min_eigenvalue_negated",
        -stats.min_eigenvalue,
        steady.tol.psd_tol * scale.max(1.0),
    ));
    Ok(out)
}

/// Central differences of `E_t(Q)` against `(A − φ_t(Q)S)E_t(Q)`.
pub fn ode_residual_checks(steady: &SteadyState, q: &Mat, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let h = cfg.fd_step;
    let m = &steady.model;
    cfg.ode_times
        .iter()
        .map(|&t| {
            let e = transition(steady, q, t)?;
            let de = (transition(steady, q, t + h)? - transition(steady, q, t - h)?) / (2.0 * h);
            let gen = &m.a - flow(steady, q, t)? * &m.s;
            let resid = norm2(&(de - gen * &e));
            Ok(Check::at_most(format!("ode_residual_t={t}"), resid, cfg.ode_tol * norm2(&e)))
        })
        .collect()
}

/// `E_{s,s+t}(Q) = E_t(φ_s(Q))` with the left side from `E_{s+t}(Q)E_s(Q)⁻¹`,
/// and `φ_{s+t}(Q) = φ_t(φ_s(Q))`.
pub fn semigroup_checks(steady: &SteadyState, q: &Mat, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &s in &cfg.semigroup_times {
        for &t in &cfg.semigroup_times {
            let phi_s = flow(steady, q, s)?;
            let shifted = transition(steady, &phi_s, t)?;
            let e_s = transition(steady, q, s)?;
            let e_st = transition(steady, q, s + t)?;
            let composed = e_s
                .transpose()
                .lu()
                .solve(&e_st.transpose())
                .map(|x| x.transpose())
                .ok_or(crate::RiccatiError::Singular {
                    name: "E_s(Q)".into(),
                    condition: f64::INFINITY,
                })?;
            out.push(Check::at_most(
                format!("semigroup_transition_s={s}_t={t}"),
                relative_gap(&composed, &shifted),
                cfg.semigroup_tol,
            ));
            let two_time = transition_two_time(steady, q, s, s + t)?;
            out.push(Check::at_most(
                format!("two_time_transition_s={s}_t={t}"),
                relative_gap(&two_time, &composed),
                cfg.semigroup_tol,
            ));
            out.push(Check::at_most(
                format!("semigroup_flow_s={s}_t={t}"),
                relative_gap(&flow(steady, q, s + t)?, &flow(steady, &phi_s, t)?),
                cfg.semigroup_tol,
            ));
        }
    }
    Ok(out)
}

/// `φ_t(Q) = E_t Q E_tᵀ + ∫₀ᵗ E_{s,t}[R + φ_s S φ_s]E_{s,t}ᵀ ds` by adaptive quadrature.
pub fn implicit_solution_check(steady: &SteadyState, q: &Mat, cfg: &SuiteConfig) -> Result<Check> {
    let t = cfg.implicit_t;
    let m = &steady.model;
    let e = transition(steady, q, t)?;
    let integral = quadrature::integrate(
        |s| {
            let phi_s = flow(steady, q, s)?;
            let e_st = transition_two_time(steady, q, s, t)?;
            Ok(&e_st * (&m.r + &phi_s * &m.s * &phi_s) * e_st.transpose())
        },
        0.0,
        t,
        &QuadratureConfig::default(),
    )?;
    let rebuilt = &e * q * e.transpose() + integral.value;
    Ok(Check::at_most(
        format!("implicit_solution_t={t}"),
        relative_gap(&rebuilt, &flow(steady, q, t)?),
        cfg.implicit_tol,
    ))
}

/// `E H Eᵀ` against a central difference of `φ_t` along the PSD direction
/// `H`, centred at `Q + hH` so every evaluation point stays PSD.
pub fn frechet_checks(steady: &SteadyState, q: &Mat, h_dir: &Mat, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let h = cfg.fd_step;
    let centre = q + h_dir * h;
    cfg.ode_times
        .iter()
        .map(|&t| {
            let fd = (flow(steady, &(q + h_dir * (2.0 * h)), t)? - flow(steady, q, t)?) / (2.0 * h);
            let exact = frechet_derivative(steady, &centre, h_dir, t)?;
            Ok(Check::at_most(format!("frechet_t={t}"), relative_gap(&fd, &exact), cfg.fd_tol))
        })
        .collect()
}

/// The factored differences of `φ_t` and `E_t` against direct subtraction.
pub fn difference_checks(steady: &SteadyState, q1: &Mat, q2: &Mat, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &t in &cfg.times {
        let direct = flow(steady, q1, t)? - flow(steady, q2, t)?;
        let scale = 1.0 + norm2(q1).max(norm2(q2)).max(norm2(&steady.p_inf));
        out.push(Check::at_most(
            format!("flow_difference_t={t}"),
            norm2(&(flow_difference(steady, q1, q2, t)? - direct)) / scale,
            cfg.difference_tol,
        ));
        let direct = transition(steady, q1, t)? - transition(steady, q2, t)?;
        out.push(Check::at_most(
            format!("transition_difference_t={t}"),
            norm2(&(e_difference(steady, q1, q2, t)? - direct)) / scale,
            cfg.difference_tol,
        ));
    }
    Ok(out)
}

/// Largest `observed/bound` per inequality family on the envelope grid.
pub fn envelope_checks(steady: &SteadyState, q1: &Mat, q2: &Mat, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let rep = bounds::verify_envelopes(steady, q1, q2, &cfg.envelope_grid, cfg.delta, cfg.gamma)?;
    let limit = 1.0 + steady.tol.check_tol;
    let kinds = [
        (CheckKind::TransitionChi, "envelope_transition_chi"),
        (CheckKind::TransitionChiDelta, "envelope_transition_chi_delta"),
        (CheckKind::InverseChi, "envelope_inverse_chi"),
        (CheckKind::LemmaLate, "envelope_lemma_late"),
        (CheckKind::LemmaEarly, "envelope_lemma_early"),
        (CheckKind::FlowLipschitz, "envelope_flow_lipschitz"),
        (CheckKind::TransitionLipschitz, "envelope_transition_lipschitz"),
        (CheckKind::FlowLipschitzDelta, "envelope_flow_lipschitz_delta"),
        (CheckKind::TransitionLipschitzDelta, "envelope_transition_lipschitz_delta"),
        (CheckKind::Envelope, "envelope_exponential"),
    ];
    Ok(kinds
        .iter()
        .filter_map(|&(kind, name)| {
            let mut any = false;
            let worst = rep.checks_of(kind).fold(0.0f64, |acc, c| {
                any = true;
                let ratio = if c.observed == 0.0 { 0.0 } else { c.observed / c.bound };
                acc.max(ratio)
            });
            any.then(|| Check::at_most(name, worst, limit))
        })
        .collect())
}

/// Loewner monotonicity on the envelope grid and convergence to `S∞` at
/// `t = 60/|ς(B)|`.
pub fn gramian_checks(steady: &SteadyState, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let curve = gramian_curve(&steady.b, &steady.model.s, &cfg.envelope_grid)?;
    let margins = monotonicity_margins(&curve, &steady.s_inf);
    let worst = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let horizon = 60.0 / spectral_abscissa(&steady.b)?.abs();
    let limit = gramian_at(&steady.b, &steady.model.s, horizon)?.s_t;
    Ok(vec![
        Check::at_most(
            "gramian_monotonicity_violation",
            -worst,
            mono_threshold(steady.tol.mono_tol, &steady.s_inf),
        ),
        Check::at_most("gramian_limit", norm2(&(limit - &steady.s_inf)), cfg.gramian_limit_tol),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl SuiteReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.passed).count();
        Self {
            failed: checks.len() - passed,
            passed,
            checks,
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// The whole suite on one model with initial conditions `q1`, `q2` and a
/// PSD perturbation direction `h_dir`.
pub fn run_suite(
    model: &ModelTriple,
    q1: &Mat,
    q2: &Mat,
    h_dir: &Mat,
    tol: &Tolerances,
    cfg: &SuiteConfig,
) -> Result<SuiteReport> {
    let steady = steady_state(model, tol)?;
    let mut checks = fixed_point_checks(&steady);
    checks.extend(oracle_checks(&steady, q1, cfg)?);
    checks.extend(ode_residual_checks(&steady, q1, cfg)?);
    checks.extend(semigroup_checks(&steady, q1, cfg)?);
    checks.push(implicit_solution_check(&steady, q1, cfg)?);
    checks.extend(frechet_checks(&steady, q1, h_dir, cfg)?);
    checks.extend(difference_checks(&steady, q1, q2, cfg)?);
    checks.extend(envelope_checks(&steady, q1, q2, cfg)?);
    checks.extend(gramian_checks(&steady, cfg)?);
    Ok(SuiteReport::new(checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    #[test]
    fn scalar_suite_passes() {
        let m = ModelTriple::scalar(0.0, 1.0, 1.0);
        let q1 = Mat::zeros(1, 1);
        let q2 = Mat::from_element(1, 1, 2.0);
        let h = Mat::identity(1, 1);
        let rep = run_suite(&m, &q1, &q2, &h, &Tolerances::default(), &SuiteConfig::default()).unwrap();
        let failed: Vec<_> = rep.checks.iter().filter(|c| !c.passed).collect();
        assert!(rep.ok(), "{failed:#?}");
    }

    #[test]
    fn random_suite_passes() {
        let tol = Tolerances::default();
        let mut g = random::rng(5);
        let m = random::random_model(&mut g, 3, &tol).unwrap();
        let q1 = random::random_psd(&mut g, 3, 1.0);
        let q2 = random::random_psd(&mut g, 3, 1.0);
        let h = random::random_psd(&mut g, 3, 1.0);
        let rep = run_suite(&m, &q1, &q2, &h, &tol, &SuiteConfig::default()).unwrap();
        let failed: Vec<_> = rep.checks.iter().filter(|c| !c.passed).collect();
        assert!(rep.ok(), "{failed:#?}");
    }

    #[test]
    fn doubling_grid_stops_at_limit() {
        let g = doubling_grid(20.0);
        assert_eq!(g.len(), 11);
        assert_eq!(*g.last().unwrap(), 10.24);
    }
}
