use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use riccati_core::bounds::verify_envelopes;
use riccati_core::floquet::{self, c_matrix, flow, flow_from_factor, Trajectory};
use riccati_core::method::{flow_method, FlowContext};
use riccati_core::oracle::{self, IntegratorConfig};
use riccati_core::spectral::norm2;
use riccati_core::steady_state::steady_state;
use riccati_core::verify::{self, relative_gap, SuiteConfig};
use riccati_core::{random, Mat, ModelTriple, Tolerances};
use serde_json::{json, Value};

use crate::input::{initial_condition, load_validated, parse_matrix_arg, Failure};
use crate::report::{canonical_json, fingerprint, rows, CheckSummary, RunReport, Stopwatch};

pub struct Settings {
    pub tol: Tolerances,
    pub integrator: IntegratorConfig,
}

/// Either closed form or oracle, or both with their discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodChoice {
    Closed,
    Oracle,
    Both,
}

impl MethodChoice {
    fn names(self) -> &'static [&'static str] {
        match self {
            MethodChoice::Closed => &["closed"],
            MethodChoice::Oracle => &["oracle"],
            MethodChoice::Both => &["closed", "oracle"],
        }
    }
}

fn report(
    command: &'static str,
    docs: &[String],
    seed: Option<u64>,
    outputs: Value,
    checks: CheckSummary,
    sw: Stopwatch,
) -> RunReport {
    RunReport {
        command,
        model_fingerprint: (!docs.is_empty()).then(|| fingerprint(docs.iter().map(String::as_str))),
        seed,
        outputs,
        checks,
        timings: sw.into_timings(),
    }
}

pub fn solve(path: &Path, set: &Settings) -> Result<RunReport, Failure> {
    let mut sw = Stopwatch::default();
    let file = sw.time("load", || load_validated(path, &set.tol))?;
    let st = sw.time("steady_state", || steady_state(&file.model, &set.tol))?;
    let checks = verify::fixed_point_checks(&st);
    let summary = CheckSummary::from_flags(checks.iter().map(|c| c.passed));
    let outputs = json!({
        "dim": file.model.dim,
        "P_inf": rows(&st.p_inf),
        "P_inf_minus": rows(&st.p_inf_minus),
        "B": rows(&st.b),
        "S_inf": rows(&st.s_inf),
        "residuals": {
            "care": st.care_residual,
            "care_minus": st.minus_residual,
            "lyapunov": st.lyap_residual,
        },
        "cond_S_inf": st.cond_s_inf,
        "warnings": st.warnings,
        "checks": checks,
    });
    let docs = [canonical_json(&file.model, file.q.as_ref())];
    Ok(report("solve", &docs, None, outputs, summary, sw))
}

fn trajectory_json(traj: &Trajectory) -> Value {
    json!({
        "method": traj.method,
        "values": traj.values.iter().map(rows).collect::<Vec<_>>(),
        "transitions": traj.transitions.as_ref().map(|ts| ts.iter().map(rows).collect::<Vec<_>>()),
    })
}

fn max_gap(a: &[Mat], b: &[Mat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| relative_gap(x, y)).fold(0.0, f64::max)
}

pub fn flow_cmd(path: &Path, grid: &[f64], method: MethodChoice, set: &Settings) -> Result<RunReport, Failure> {
    set.integrator.validate()?;
    let mut sw = Stopwatch::default();
    let file = sw.time("load", || load_validated(path, &set.tol))?;
    let q = initial_condition(&file);
    let st = sw.time("steady_state", || steady_state(&file.model, &set.tol))?;
    let ctx = FlowContext {
        steady: &st,
        integrator: &set.integrator,
    };
    let mut trajectories = Vec::new();
    for name in method.names() {
        let m = flow_method(name)?;
        trajectories.push(sw.time(name, || m.trajectory(&ctx, &q, grid))?);
    }
    let mut outputs = json!({
        "grid": grid,
        "q_from_file": file.q.is_some(),
        "trajectories": trajectories.iter().map(trajectory_json).collect::<Vec<_>>(),
    });
    if let [closed, integrated] = &trajectories[..] {
        let flow_gap = max_gap(&closed.values, &integrated.values);
        let transition_gap = match (&closed.transitions, &integrated.transitions) {
            (Some(a), Some(b)) => max_gap(a, b),
            _ => 0.0,
        };
        outputs["discrepancy"] = json!({
            "flow": flow_gap,
            "transition": transition_gap,
            "max": flow_gap.max(transition_gap),
        });
    }
    let docs = [canonical_json(&file.model, Some(&q))];
    Ok(report("flow", &docs, None, outputs, CheckSummary::default(), sw))
}

pub fn semigroup(path: &Path, s: f64, t: f64, method: MethodChoice, set: &Settings) -> Result<RunReport, Failure> {
    set.integrator.validate()?;
    let mut sw = Stopwatch::default();
    let file = sw.time("load", || load_validated(path, &set.tol))?;
    let q = initial_condition(&file);
    let st = sw.time("steady_state", || steady_state(&file.model, &set.tol))?;
    let ctx = FlowContext {
        steady: &st,
        integrator: &set.integrator,
    };
    let mut transitions = Vec::new();
    for name in method.names() {
        let m = flow_method(name)?;
        transitions.push((*name, sw.time(name, || m.transition(&ctx, &q, s, t))?));
    }
    // The factors behind E_{s,t}(Q) = e^{(t−s)B} C_{t−s}(φ_s(Q))⁻¹.
    let (phi_s, factor) = sw.time("factors", || -> Result<_, Failure> {
        let phi_s = flow(&st, &q, s)?;
        let f = c_matrix(&st, &phi_s, t - s)?;
        Ok((phi_s, f))
    })?;
    let phi_t = flow_from_factor(&st, &factor)?;
    let (name, e) = &transitions[0];
    let mut outputs = json!({
        "s": s,
        "t": t,
        "method": name,
        "E": rows(e),
        "E_norm": norm2(e),
        "phi_s": rows(&phi_s),
        "phi_t": rows(&phi_t),
        "factors": {
            "tau": factor.t,
            "exp_tau_B": rows(&factor.exp_tb),
            "S_tau": rows(&factor.s_t),
            "C": rows(&factor.c),
            "C_inv": rows(&factor.c_inv),
            "cond_C": factor.cond_c,
            "inverse_residual": factor.inverse_residual,
        },
    });
    if let [(_, closed), (_, integrated)] = &transitions[..] {
        outputs["oracle_E"] = json!(rows(integrated));
        outputs["discrepancy"] = json!(relative_gap(closed, integrated));
    }
    let docs = [canonical_json(&file.model, Some(&q))];
    Ok(report("semigroup", &docs, None, outputs, CheckSummary::default(), sw))
}

pub fn bounds(
    path: &Path,
    grid: &[f64],
    delta: f64,
    gamma: f64,
    q2: Option<&str>,
    set: &Settings,
) -> Result<RunReport, Failure> {
    let mut sw = Stopwatch::default();
    let file = sw.time("load", || load_validated(path, &set.tol))?;
    let q1 = initial_condition(&file);
    let q2 = match q2 {
        Some(arg) => parse_matrix_arg(arg, file.model.dim)?,
        None => q1.clone(),
    };
    let st = sw.time("steady_state", || steady_state(&file.model, &set.tol))?;
    let rep = sw.time("bounds", || verify_envelopes(&st, &q1, &q2, grid, delta, gamma))?;
    let summary = CheckSummary::from_flags(rep.envelope_checks.iter().map(|c| c.pass));
    let outputs = json!({
        "grid": grid,
        "Q2": rows(&q2),
        "report": rep,
    });
    let docs = [canonical_json(&file.model, Some(&q1))];
    Ok(report("bounds", &docs, None, outputs, summary, sw))
}

struct Case {
    model: ModelTriple,
    q1: Mat,
    q2: Mat,
    h: Mat,
}

pub enum VerifySource<'a> {
    File { path: &'a Path, q2: Option<&'a str> },
    Random { r: usize, n: usize, seed: u64 },
}

pub fn verify_cmd(source: VerifySource, set: &Settings) -> Result<RunReport, Failure> {
    set.integrator.validate()?;
    let mut sw = Stopwatch::default();
    let (cases, seed) = sw.time("cases", || -> Result<_, Failure> {
        match source {
            VerifySource::File { path, q2 } => {
                let file = load_validated(path, &set.tol)?;
                let q1 = initial_condition(&file);
                let r = file.model.dim;
                let q2 = match q2 {
                    Some(arg) => parse_matrix_arg(arg, r)?,
                    None => &q1 + Mat::identity(r, r),
                };
                let case = Case {
                    model: file.model,
                    q1,
                    q2,
                    h: Mat::identity(r, r),
                };
                Ok((vec![case], None))
            }
            VerifySource::Random { r, n, seed } => {
                if r == 0 || n == 0 {
                    return Err(Failure::input("--random needs positive dimension and count"));
                }
                let mut g = random::rng(seed);
                let mut cases = Vec::with_capacity(n);
                for _ in 0..n {
                    let model = random::random_model(&mut g, r, &set.tol)?;
                    let q1 = random::random_psd(&mut g, r, 1.0);
                    let q2 = random::random_psd(&mut g, r, 1.0);
                    let h = random::random_psd(&mut g, r, 1.0);
                    cases.push(Case { model, q1, q2, h });
                }
                Ok((cases, Some(seed)))
            }
        }
    })?;

    let cfg = SuiteConfig {
        integrator: set.integrator.clone(),
        ..SuiteConfig::default()
    };
    // Cases run concurrently; collect keeps them in index order.
    let results: Vec<_> = sw.time("suites", || {
        cases
            .par_iter()
            .map(|c| verify::run_suite(&c.model, &c.q1, &c.q2, &c.h, &set.tol, &cfg))
            .collect()
    });

    let mut summary = CheckSummary::default();
    let mut errors = 0;
    let mut per_case = Vec::new();
    for (k, (case, res)) in cases.iter().zip(results).enumerate() {
        let doc = canonical_json(&case.model, Some(&case.q1));
        let fp = fingerprint([doc.as_str()]);
        per_case.push(match res {
            Ok(rep) => {
                let s = CheckSummary {
                    passed: rep.passed,
                    failed: rep.failed,
                };
                summary.add(s);
                json!({
                    "index": k,
                    "dim": case.model.dim,
                    "fingerprint": fp,
                    "passed": rep.passed,
                    "failed": rep.failed,
                    "failures": rep.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>(),
                })
            }
            Err(e) => {
                errors += 1;
                summary.failed += 1;
                json!({
                    "index": k,
                    "dim": case.model.dim,
                    "fingerprint": fp,
                    "error": e.to_string(),
                })
            }
        });
    }
    let docs: Vec<String> = cases.iter().map(|c| canonical_json(&c.model, Some(&c.q1))).collect();
    let outputs = json!({
        "cases": per_case,
        "errors": errors,
        "all_passed": summary.ok(),
    });
    Ok(report("verify", &docs, seed, outputs, summary, sw))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub struct BenchArgs<'a> {
    pub dims: &'a [usize],
    pub points: usize,
    pub t_max: f64,
    pub runs: usize,
    pub seed: u64,
}

pub fn bench(args: &BenchArgs, set: &Settings) -> Result<RunReport, Failure> {
    set.integrator.validate()?;
    if args.points == 0 || args.runs == 0 || !(args.t_max > 0.0) || !args.t_max.is_finite() {
        return Err(Failure::input("bench needs positive --t-points, --runs and --t-max"));
    }
    if args.dims.contains(&0) {
        return Err(Failure::input("dimensions must be positive"));
    }
    let mut sw = Stopwatch::default();
    let grid: Vec<f64> = (1..=args.points)
        .map(|k| args.t_max * k as f64 / args.points as f64)
        .collect();
    let mut g = random::rng(args.seed);
    let mut rows_out = Vec::new();
    let mut docs = Vec::new();
    for &r in args.dims {
        let model = random::random_model(&mut g, r, &set.tol)?;
        let q = random::random_psd(&mut g, r, 1.0);
        docs.push(canonical_json(&model, Some(&q)));
        let mut closed = Vec::with_capacity(args.runs);
        let mut integrated = Vec::with_capacity(args.runs);
        let mut gap: f64 = 0.0;
        let stage = format!("r={r}");
        sw.time(&stage, || -> Result<(), Failure> {
            for _ in 0..args.runs {
                let start = Instant::now();
                let st = steady_state(&model, &set.tol)?;
                let traj = floquet::trajectory(&st, &q, &grid)?;
                closed.push(start.elapsed().as_secs_f64());

                let start = Instant::now();
                let (reference, _) = oracle::integrate_joint(&model, &q, &grid, &set.integrator)?;
                integrated.push(start.elapsed().as_secs_f64());
                gap = gap.max(max_gap(&traj.values, &reference.values));
            }
            Ok(())
        })?;
        let (c, o) = (median(closed.clone()), median(integrated.clone()));
        rows_out.push(json!({
            "r": r,
            "closed_median_seconds": c,
            "oracle_median_seconds": o,
            "speedup": o / c,
            "closed_faster": c < o,
            "closed_runs": closed,
            "oracle_runs": integrated,
            "max_flow_discrepancy": gap,
        }));
    }
    let outputs = json!({
        "t_points": args.points,
        "t_max": args.t_max,
        "runs": args.runs,
        "oracle_rel_tol": set.integrator.rel_tol,
        "results": rows_out,
    });
    Ok(report("bench", &docs, Some(args.seed), outputs, CheckSummary::default(), sw))
}
