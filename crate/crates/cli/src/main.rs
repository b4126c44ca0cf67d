//! `riccati`: solve, evaluate and verify matrix Riccati flows from JSON model
//! files. Reports are JSON on stdout or in `--out`.
//!
//! Exit codes: 0 success, 2 bad input or failed validation, 3 numerical
//! failure, 4 failed invariant checks.

mod commands;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riccati_core::oracle::IntegratorConfig;
use riccati_core::verify::doubling_grid;
use riccati_core::Tolerances;

use commands::{BenchArgs, MethodChoice, Settings, VerifySource};
use input::{parse_grid, parse_list, Failure, EXIT_INVARIANT};
use report::RunReport;

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "riccati", version, about = "Floquet-type evaluation of matrix Riccati flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Pretty-print the JSON report.
    #[arg(long, global = true)]
    pretty: bool,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    sym_tol: Option<f64>,
    #[arg(long, global = true)]
    psd_tol: Option<f64>,
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    #[arg(long, global = true)]
    care_tol: Option<f64>,
    #[arg(long, global = true)]
    lyap_tol: Option<f64>,
    #[arg(long, global = true)]
    mono_tol: Option<f64>,
    #[arg(long, global = true)]
    check_tol: Option<f64>,

    /// Oracle relative tolerance.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
    /// Oracle absolute tolerance.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Oracle step-size cap.
    #[arg(long, global = true)]
    max_step: Option<f64>,
    /// Oracle step budget.
    #[arg(long, global = true)]
    max_steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Fixed points P_inf, P_inf_minus, B, S_inf and their residuals.
    Solve { model: PathBuf },

    /// Flow and transition matrices on a time grid.
    Flow {
        model: PathBuf,
        /// Comma list `0.5,1,2` or range `start:step:end`. The fully
        /// qualified `Vec` keeps clap from splitting it into several values.
        #[arg(long = "t", value_parser = parse_grid, allow_hyphen_values = true)]
        grid: ::std::vec::Vec<f64>,
        #[arg(long, value_enum, default_value = "closed")]
        method: MethodChoice,
    },

    /// Two-time transition E_{s,t}(Q) with its Floquet factors.
    Semigroup {
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, value_enum, default_value = "closed")]
        method: MethodChoice,
    },

    /// Contraction constants and envelope checks.
    Bounds {
        model: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Defaults to 0.01·2^k up to 20.
        #[arg(long = "t", value_parser = parse_grid)]
        grid: Option<::std::vec::Vec<f64>>,
        #[arg(long, default_value_t = riccati_core::bounds::DEFAULT_GAMMA)]
        gamma: f64,
        /// Second initial condition: inline JSON matrix or a file.
        #[arg(long, value_name = "PATH|JSON")]
        q2: Option<String>,
    },

    /// The invariant suite on a model file or on seeded random models.
    Verify {
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        model: Option<PathBuf>,
        /// Dimension, count and optional seed.
        #[arg(long, num_args = 2..=3, value_names = ["R", "N", "SEED"])]
        random: Option<Vec<u64>>,
        /// Second initial condition for a model file (default Q + I).
        #[arg(long, value_name = "PATH|JSON", requires = "model")]
        q2: Option<String>,
    },

    /// Closed-form evaluation against oracle integration, median of runs.
    Bench {
        #[arg(long = "r", value_parser = parse_list::<usize>, default_value = "50")]
        dims: ::std::vec::Vec<usize>,
        #[arg(long, default_value_t = 100)]
        t_points: usize,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

impl Common {
    fn settings(&self) -> Result<Settings, Failure> {
        let mut tol = Tolerances::default();
        let mut integrator = IntegratorConfig::default();
        let overrides = [
            (&mut tol.sym_tol, self.sym_tol, "sym-tol"),
            (&mut tol.psd_tol, self.psd_tol, "psd-tol"),
            (&mut tol.rank_tol, self.rank_tol, "rank-tol"),
            (&mut tol.care_tol, self.care_tol, "care-tol"),
            (&mut tol.lyap_tol, self.lyap_tol, "lyap-tol"),
            (&mut tol.mono_tol, self.mono_tol, "mono-tol"),
            (&mut tol.check_tol, self.check_tol, "check-tol"),
            (&mut integrator.rel_tol, self.rel_tol, "rel-tol"),
            (&mut integrator.abs_tol, self.abs_tol, "abs-tol"),
            (&mut integrator.max_step, self.max_step, "max-step"),
        ];
        for (slot, value, flag) in overrides {
            if let Some(v) = value {
                if !(v > 0.0) {
                    return Err(Failure::input(format!("--{flag} must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        if let Some(n) = self.max_steps {
            integrator.max_steps = n;
        }
        Ok(Settings { tol, integrator })
    }
}

/// `RICCATI_SEED` when set, otherwise the built-in default.
fn default_seed() -> Result<u64, Failure> {
    match std::env::var("RICCATI_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("RICCATI_SEED `{v}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn run(cli: &Cli) -> Result<RunReport, Failure> {
    let set = cli.common.settings()?;
    match &cli.command {
        Command::Solve { model } => commands::solve(model, &set),
        Command::Flow { model, grid, method } => commands::flow_cmd(model, grid, *method, &set),
        Command::Semigroup { model, s, t, method } => commands::semigroup(model, *s, *t, *method, &set),
        Command::Bounds {
            model,
            delta,
            grid,
            gamma,
            q2,
        } => {
            let grid = grid.clone().unwrap_or_else(|| doubling_grid(20.0));
            commands::bounds(model, &grid, *delta, *gamma, q2.as_deref(), &set)
        }
        Command::Verify { model, random, q2 } => {
            let source = match (model, random) {
                (Some(path), _) => VerifySource::File {
                    path,
                    q2: q2.as_deref(),
                },
                (None, Some(values)) => VerifySource::Random {
                    r: values[0] as usize,
                    n: values[1] as usize,
                    seed: match values.get(2) {
                        Some(&s) => s,
                        None => default_seed()?,
                    },
                },
                (None, None) => unreachable!("clap requires a model or --random"),
            };
            commands::verify_cmd(source, &set)
        }
        Command::Bench {
            dims,
            t_points,
            t_max,
            runs,
            seed,
        } => {
            let seed = match seed {
                Some(s) => *s,
                None => default_seed()?,
            };
            let args = BenchArgs {
                dims,
                points: *t_points,
                t_max: *t_max,
                runs: *runs,
                seed,
            };
            commands::bench(&args, &set)
        }
    }
}

fn emit(report: &RunReport, common: &Common) -> Result<(), Failure> {
    let text = if common.pretty {
        serde_json::to_string_pretty(report)
    } else {
        serde_json::to_string(report)
    }
    .map_err(|e| Failure::input(format!("cannot serialize report: {e}")))?;
    match &common.out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Failure::input(format!("cannot write report: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|report| {
        emit(&report, &cli.common)?;
        if report.checks.ok() {
            Ok(())
        } else {
            Err(Failure {
                code: EXIT_INVARIANT,
                message: format!("{} of {} checks failed", report.checks.failed, report.checks.failed + report.checks.passed),
            })
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
