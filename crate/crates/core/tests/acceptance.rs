//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the lines always reach the output; exits non-zero on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use riccati_core::bounds::{verify_envelopes, CheckKind, DEFAULT_GAMMA};
use riccati_core::floquet::{self, flow, transition};
use riccati_core::gramian::gramian_at;
use riccati_core::oracle::{self, integrate_joint, IntegratorConfig};
use riccati_core::special_case::{
    closed_fixed_points, closed_gramian, closed_transition, commuting_check, structural_identities,
};
use riccati_core::spectral::norm2;
use riccati_core::steady_state::steady_state;
use riccati_core::verify::{self, relative_gap, Check, SuiteConfig};
use riccati_core::{random, Mat, ModelTriple, SteadyState, Tolerances};

const SEED: u64 = 20_240_601;
const COMMUTING_SEED: u64 = 77;

struct Case {
    model: ModelTriple,
    steady: SteadyState,
    q1: Mat,
    q2: Mat,
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn worst(checks: &[Check]) -> (bool, f64, f64) {
    let passed = checks.iter().all(|c| c.passed);
    let (v, t) = checks
        .iter()
        .map(|c| (c.value, c.threshold))
        .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 - x.1 > acc.0 - acc.1 { x } else { acc });
    (passed, v, t)
}

fn describe_failures(checks: &[Check]) -> String {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .take(3)
        .map(|c| format!("{} = {:.3e} vs {:.3e}", c.name, c.value, c.threshold))
        .collect();
    if failed.is_empty() {
        String::new()
    } else {
        format!("; first failures: {}", failed.join(", "))
    }
}

fn cases(tol: &Tolerances) -> Vec<Case> {
    let mut g = random::rng(SEED);
    (0..50)
        .map(|k| {
            let r = 2 + k % 7;
            let model = random::random_model(&mut g, r, tol).expect("model generation");
            let q1 = random::random_psd(&mut g, r, 1.0);
            let q2 = random::random_psd(&mut g, r, 1.0);
            let steady = steady_state(&model, tol).expect("steady state");
            Case { model, steady, q1, q2 }
        })
        .collect()
}

fn scalar_ground_truth(tol: &Tolerances) -> Outcome {
    let start = Instant::now();
    let model = ModelTriple::scalar(0.0, 1.0, 1.0);
    let st = steady_state(&model, tol).unwrap();
    let q = Mat::zeros(1, 1);
    let phi_closed = flow(&st, &q, 1.0).unwrap()[(0, 0)];
    let e_closed = transition(&st, &q, 1.0).unwrap()[(0, 0)];
    let (traj, _) = integrate_joint(&model, &q, &[1.0], &IntegratorConfig::default()).unwrap();
    let phi_oracle = traj.values[0][(0, 0)];
    let e_oracle = traj.transitions.unwrap()[0][(0, 0)];
    let elapsed = start.elapsed();
    let errs = [
        ((phi_closed - 0.7615941560).abs(), 1e-9),
        ((phi_oracle - 0.7615941560).abs(), 1e-9),
        ((e_closed - 0.6480542736).abs(), 1e-9),
        ((e_oracle - 0.6480542736).abs(), 1e-9),
        ((st.p_inf[(0, 0)] - 1.0).abs(), 1e-10),
        ((st.p_inf_minus[(0, 0)] + 1.0).abs(), 1e-10),
        ((st.s_inf[(0, 0)] - 0.5).abs(), 1e-10),
    ];
    let passed = errs.iter().all(|(e, t)| e <= t) && elapsed < Duration::from_secs(1);
    Outcome {
        passed,
        detail: format!(
            "phi closed {phi_closed:.10} oracle {phi_oracle:.10}, E closed {e_closed:.10} oracle {e_oracle:.10}, P_inf {:.12}, P_inf_minus {:.12}, S_inf {:.12}, {:.3}s",
            st.p_inf[(0, 0)],
            st.p_inf_minus[(0, 0)],
            st.s_inf[(0, 0)],
            elapsed.as_secs_f64()
        ),
    }
}

fn floquet_vs_oracle(cases: &[Case], cfg: &SuiteConfig) -> Outcome {
    let start = Instant::now();
    let results: Vec<_> = cases
        .par_iter()
        .map(|c| verify::oracle_checks(&c.steady, &c.q1, cfg))
        .collect();
    let elapsed = start.elapsed();
    let mut checks = Vec::new();
    let mut errors = 0;
    for r in results {
        match r {
            Ok(c) => checks.extend(c.into_iter().filter(|c| c.name.starts_with("oracle_transition") || c.name.starts_with("oracle_flow"))),
            Err(_) => errors += 1,
        }
    }
    let (ok, v, t) = worst(&checks);
    Outcome {
        passed: ok && errors == 0 && elapsed < Duration::from_secs(60),
        detail: format!(
            "{} comparisons, max relative discrepancy {v:.3e} (tol {t:.0e}), {errors} errors, {:.2}s{}",
            checks.len(),
            elapsed.as_secs_f64(),
            describe_failures(&checks)
        ),
    }
}

fn fixed_points(cases: &[Case]) -> Outcome {
    let checks: Vec<Check> = cases.iter().flat_map(|c| verify::fixed_point_checks(&c.steady)).collect();
    let max_care = cases
        .iter()
        .map(|c| c.steady.care_residual.max(c.steady.minus_residual) / norm2(&c.model.r))
        .fold(0.0, f64::max);
    let (ok, _, _) = worst(&checks);
    Outcome {
        passed: ok,
        detail: format!(
            "{} checks, max residual/‖R‖ {max_care:.3e} (tol 1e-9){}",
            checks.len(),
            describe_failures(&checks)
        ),
    }
}

fn envelope_ratio(cases: &[Case], cfg: &SuiteConfig, kinds: &[CheckKind], pair: bool) -> (bool, f64, usize) {
    let slack = 1.0 + Tolerances::default().check_tol;
    let per_case: Vec<(f64, usize)> = cases
        .par_iter()
        .map(|c| {
            let q2 = if pair { &c.q2 } else { &c.q1 };
            let rep = verify_envelopes(&c.steady, &c.q1, q2, &cfg.envelope_grid, cfg.delta, cfg.gamma).unwrap();
            let mut worst: f64 = 0.0;
            let mut n = 0;
            for check in rep.envelope_checks.iter().filter(|x| kinds.contains(&x.kind)) {
                n += 1;
                if check.observed > 0.0 {
                    worst = worst.max(check.observed / check.bound);
                }
            }
            (worst, n)
        })
        .collect();
    let w = per_case.iter().map(|x| x.0).fold(0.0, f64::max);
    let n = per_case.iter().map(|x| x.1).sum();
    (w <= slack, w, n)
}

fn transition_envelopes(cases: &[Case], cfg: &SuiteConfig) -> Outcome {
    let kinds = [
        CheckKind::TransitionChi,
        CheckKind::TransitionChiDelta,
        CheckKind::LemmaLate,
        CheckKind::LemmaEarly,
    ];
    let mut lines = Vec::new();
    let mut passed = true;
    for k in kinds {
        let (ok, w, n) = envelope_ratio(cases, cfg, &[k], false);
        passed &= ok;
        lines.push(format!("{k:?} max ratio {w:.4} over {n}"));
    }
    Outcome {
        passed,
        detail: format!("{} (limit 1+1e-9)", lines.join(", ")),
    }
}

fn difference_identities(cases: &[Case], cfg: &SuiteConfig) -> Outcome {
    let checks: Vec<Check> = cases
        .par_iter()
        .map(|c| verify::difference_checks(&c.steady, &c.q1, &c.q2, cfg).unwrap())
        .flatten()
        .collect();
    let (ok_diff, v, t) = worst(&checks);
    let (ok_phi, w_phi, _) = envelope_ratio(cases, cfg, &[CheckKind::FlowLipschitz], true);
    let (ok_e, w_e, _) = envelope_ratio(cases, cfg, &[CheckKind::TransitionLipschitz], true);
    Outcome {
        passed: ok_diff && ok_phi && ok_e,
        detail: format!(
            "difference formulas max {v:.3e} (tol {t:.0e}); pair contractions max ratio phi {w_phi:.4}, E {w_e:.4} on {} pairs{}",
            cases.len(),
            describe_failures(&checks)
        ),
    }
}

fn semigroup_laws(cases: &[Case], cfg: &SuiteConfig) -> Outcome {
    let checks: Vec<Check> = cases
        .par_iter()
        .map(|c| verify::semigroup_checks(&c.steady, &c.q1, cfg).unwrap())
        .flatten()
        .collect();
    let (ok, v, t) = worst(&checks);
    Outcome {
        passed: ok,
        detail: format!("{} checks, max gap {v:.3e} (tol {t:.0e}){}", checks.len(), describe_failures(&checks)),
    }
}

fn implicit_solution(cases: &[Case], cfg: &SuiteConfig) -> Outcome {
    let checks: Vec<Check> = cases[..10]
        .par_iter()
        .map(|c| verify::implicit_solution_check(&c.steady, &c.q1, cfg).unwrap())
        .collect();
    let (ok, v, t) = worst(&checks);
    Outcome {
        passed: ok,
        detail: format!("10 models at t=2, max gap {v:.3e} (tol {t:.0e}){}", describe_failures(&checks)),
    }
}

fn special_case(tol: &Tolerances) -> Outcome {
    let mut g = random::rng(COMMUTING_SEED);
    let limit = 1e-8;
    let mut worst_fp: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    let mut identities_ok = true;
    let mut worst_id: f64 = 0.0;
    for k in 0..20 {
        let r = 2 + k % 5;
        let model = random::random_commuting_model(&mut g, r, tol).unwrap();
        let q = random::random_psd(&mut g, r, 1.0);
        let cm = commuting_check(&model, tol).expect("generated model is commuting");
        let fp = closed_fixed_points(&cm).unwrap();
        let st = steady_state(&model, tol).unwrap();
        worst_fp = worst_fp
            .max(relative_gap(&fp.p_inf, &st.p_inf))
            .max(relative_gap(&fp.p_inf_minus, &st.p_inf_minus))
            .max(relative_gap(&fp.b, &st.b));
        for j in 0..=20 {
            let t = 0.5 * j as f64;
            let e = closed_transition(&cm, &fp, &q, t).unwrap();
            worst_e = worst_e.max(relative_gap(&e, &transition(&st, &q, t).unwrap()));
            let s_t = closed_gramian(&cm, &fp, t).unwrap();
            worst_s = worst_s.max(relative_gap(&s_t, &gramian_at(&st.b, &model.s, t).unwrap().s_t));
        }
        for c in structural_identities(&cm, &fp, &st.p_inf, 1e-9).unwrap() {
            identities_ok &= c.passed;
            worst_id = worst_id.max(c.residual / c.tolerance);
        }
    }
    Outcome {
        passed: worst_fp <= limit && worst_e <= limit && worst_s <= limit && identities_ok,
        detail: format!(
            "20 models: fixed points {worst_fp:.3e}, transition {worst_e:.3e}, Gramian {worst_s:.3e} (tol 1e-8); identity residuals at most {worst_id:.3e} of their 1e-9 scaled tolerance"
        ),
    }
}

fn gramian_properties(cases: &[Case], cfg: &SuiteConfig) -> Outcome {
    let checks: Vec<Check> = cases
        .par_iter()
        .map(|c| verify::gramian_checks(&c.steady, cfg).unwrap())
        .flatten()
        .collect();
    let limit_worst = checks
        .iter()
        .filter(|c| c.name == "gramian_limit")
        .map(|c| c.value)
        .fold(0.0, f64::max);
    let (ok, _, _) = worst(&checks);
    Outcome {
        passed: ok,
        detail: format!(
            "monotonicity and limit on {} models, max ‖S_t − S_inf‖ at 60/|abscissa| {limit_worst:.3e} (tol 1e-8){}",
            cases.len(),
            describe_failures(&checks)
        ),
    }
}

fn exponential_envelope(cases: &[Case], cfg: &SuiteConfig) -> Outcome {
    let (ok, w, n) = envelope_ratio(cases, cfg, &[CheckKind::Envelope], false);
    let lognorm = cases
        .iter()
        .filter(|c| {
            riccati_core::bounds::coppel_envelope(&c.steady.b, DEFAULT_GAMMA)
                .unwrap()
                .selected
                .name
                == "lognorm"
        })
        .count();
    Outcome {
        passed: ok,
        detail: format!(
            "{n} grid points, max ‖e^(tB)‖/(alpha e^(-beta t)) {w:.4}; selected lognorm on {lognorm}, coppel on {}",
            cases.len() - lognorm
        ),
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn performance(tol: &Tolerances) -> Outcome {
    let r = 50;
    let mut g = random::rng(SEED ^ 0x50);
    let model = random::random_model(&mut g, r, tol).unwrap();
    let q = random::random_psd(&mut g, r, 1.0);
    let grid: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
    let integ = IntegratorConfig::default();

    let mut closed = Vec::new();
    let mut integrated = Vec::new();
    let mut gap: f64 = 0.0;
    for _ in 0..5 {
        let start = Instant::now();
        let st = steady_state(&model, tol).unwrap();
        let traj = floquet::trajectory(&st, &q, &grid).unwrap();
        closed.push(start.elapsed().as_secs_f64());

        let start = Instant::now();
        let (reference, _) = oracle::integrate_joint(&model, &q, &grid, &integ).unwrap();
        integrated.push(start.elapsed().as_secs_f64());

        for (a, b) in traj.values.iter().zip(&reference.values) {
            gap = gap.max(relative_gap(a, b));
        }
    }
    let (c, o) = (median(closed), median(integrated));
    Outcome {
        passed: c < o,
        detail: format!(
            "r=50, 100 points: closed-form median {c:.4}s, oracle median {o:.4}s (speed-up {:.1}x), max flow gap {gap:.2e}",
            o / c
        ),
    }
}

fn main() -> ExitCode {
    let tol = Tolerances::default();
    let cfg = SuiteConfig::default();
    let setup = Instant::now();
    let cases = cases(&tol);
    println!(
        "acceptance: 50 random models (r = 2..8, seed {SEED}) prepared in {:.2}s",
        setup.elapsed().as_secs_f64()
    );

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("scalar ground truth", Box::new(|| scalar_ground_truth(&tol))),
        ("closed form vs oracle", Box::new(|| floquet_vs_oracle(&cases, &cfg))),
        ("fixed-point residuals", Box::new(|| fixed_points(&cases))),
        ("transition envelopes", Box::new(|| transition_envelopes(&cases, &cfg))),
        ("difference identities and contractions", Box::new(|| difference_identities(&cases, &cfg))),
        ("semigroup laws", Box::new(|| semigroup_laws(&cases, &cfg))),
        ("implicit solution", Box::new(|| implicit_solution(&cases, &cfg))),
        ("commuting special case", Box::new(|| special_case(&tol))),
        ("Gramian properties", Box::new(|| gramian_properties(&cases, &cfg))),
        ("exponential envelope", Box::new(|| exponential_envelope(&cases, &cfg))),
        ("performance", Box::new(|| performance(&tol))),
    ];

    let mut failures = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let out = run();
        let tag = if out.passed { "PASS" } else { "FAIL" };
        if !out.passed {
            failures += 1;
        }
        println!("criterion {:>2} [{tag}] {title}: {}", k + 1, out.detail);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
