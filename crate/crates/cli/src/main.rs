use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

mod builtin;
mod output;
mod verbs;

use output::RunDir;
use verbs::{Outcome, Overrides};

/// Certified lower and upper bounds for vectorial variational problems.
///
/// File arguments fall back to the bundled instances by name
/// (poincare, double_well, convex, well_1d).
#[derive(Parser)]
#[command(name = "varbound", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone, Debug, Default)]
struct SolverFlags {
    /// Discretization overrides: comma-separated key=value pairs with keys
    /// cells (e.g. 8x8), gauss, x, y, z, conj, elements.
    #[arg(long)]
    grid: Option<String>,
    /// Degree of the phi test functions.
    #[arg(long)]
    phi_degree: Option<u32>,
    /// Degree of the h and l test functions.
    #[arg(long)]
    h_degree: Option<u32>,
    /// Half-width of the (y, z) box.
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args, Clone, Debug)]
struct Out {
    /// Output directory (default varbound-out/<verb>).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verb {
    /// Occupation-measure relaxation on a grid; lower bound plus extracted measure.
    Omr {
        problem: String,
        #[command(flatten)]
        flags: SolverFlags,
        #[command(flatten)]
        out: Out,
    },
    /// Polynomial dual relaxation.
    Pdr {
        #[command(subcommand)]
        action: PdrAction,
    },
    /// Conjugate dual for convex-additive problems with a sweep over grid sizes.
    Sharp {
        problem: String,
        #[command(flatten)]
        flags: SolverFlags,
        /// Chebyshev fit tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: Out,
    },
    /// Finite-element upper bound.
    Upper {
        problem: String,
        /// Discretization overrides, e.g. elements=64x64.
        #[arg(long)]
        grid: Option<String>,
        /// Seed for the multistart initial guesses.
        #[arg(long)]
        seed: Option<u64>,
        /// Gradient tolerance of the minimizer.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: Out,
    },
    /// Check that a measure pair satisfies the relaxation constraints.
    VerifyMeasure {
        file: String,
        /// Check in exact rational arithmetic.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        phi_degree: Option<u32>,
        #[arg(long)]
        h_degree: Option<u32>,
        /// Residual tolerance in float mode.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Certified lower bound, relaxation value and upper bound side by side.
    Sandwich {
        problem: String,
        #[command(flatten)]
        flags: SolverFlags,
        #[arg(long)]
        seed: Option<u64>,
        /// Slack allowed in the ordering checks.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
    /// Run every bundled instance and measure.
    Examples {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
}

#[derive(Subcommand)]
enum PdrAction {
    /// Solve the collocation LP and certify the result.
    Solve {
        problem: String,
        #[command(flatten)]
        flags: SolverFlags,
        #[command(flatten)]
        out: Out,
    },
    /// Re-certify a certificate file: shift it until it is nonnegative.
    Certify {
        certificate: String,
        /// Problem file, if not the one named in the certificate.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        radius: Option<f64>,
        #[command(flatten)]
        out: Out,
    },
    /// Check a certificate file without modifying it.
    Check {
        certificate: String,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[command(flatten)]
        out: Out,
    },
}

fn overrides(flags: &SolverFlags, seed: Option<u64>) -> Overrides {
    Overrides {
        grid: flags.grid.clone(),
        phi_degree: flags.phi_degree,
        h_degree: flags.h_degree,
        radius: flags.radius,
        seed,
    }
}

fn open(out: &Out, verb: &str) -> varbound::Result<RunDir> {
    let dir = out.out.clone().unwrap_or_else(|| PathBuf::from("varbound-out").join(verb));
    RunDir::create(&dir, verb, std::env::args().skip(1).collect())
}

fn dispatch(verb: Verb) -> varbound::Result<(Outcome, RunDir)> {
    let mut run;
    let outcome = match verb {
        Verb::Omr { problem, flags, out } => {
            let (pf, src) = builtin::problem(&problem)?;
            run = open(&out, "omr")?;
            verbs::omr(pf, &src, &overrides(&flags, None), &mut run)?
        }
        Verb::Pdr { action } => match action {
            PdrAction::Solve { problem, flags, out } => {
                let (pf, src) = builtin::problem(&problem)?;
                run = open(&out, "pdr-solve")?;
                verbs::pdr_solve(pf, &src, &overrides(&flags, None), &mut run)?
            }
            PdrAction::Certify { certificate, problem, radius, out } => {
                run = open(&out, "pdr-certify")?;
                verbs::pdr_certify(&certificate, problem.as_deref(), radius, &mut run)?
            }
            PdrAction::Check { certificate, problem, radius, tol, out } => {
                run = open(&out, "pdr-check")?;
                verbs::pdr_check(&certificate, problem.as_deref(), radius, tol, &mut run)?
            }
        },
        Verb::Sharp { problem, flags, tol, out } => {
            let (pf, src) = builtin::problem(&problem)?;
            run = open(&out, "sharp")?;
            verbs::sharp(pf, &src, &overrides(&flags, None), tol, &mut run)?
        }
        Verb::Upper { problem, grid, seed, tol, out } => {
            let (pf, src) = builtin::problem(&problem)?;
            run = open(&out, "upper")?;
            let o = Overrides { grid, seed, ..Default::default() };
            verbs::upper(pf, &src, &o, tol, &mut run)?
        }
        Verb::VerifyMeasure { file, exact, phi_degree, h_degree, tol, out } => {
            run = open(&out, "verify-measure")?;
            verbs::verify_measure(&file, exact, (phi_degree, h_degree), tol, &mut run)?
        }
        Verb::Sandwich { problem, flags, seed, tol, out } => {
            let (pf, src) = builtin::problem(&problem)?;
            run = open(&out, "sandwich")?;
            verbs::sandwich(pf, &src, &overrides(&flags, seed), tol, &mut run)?
        }
        Verb::Examples { seed, tol, out } => {
            run = open(&out, "examples")?;
            verbs::examples(seed, tol, &mut run)?
        }
    };
    Ok((outcome, run))
}

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let record = json!({ "error": { "kind": kind, "message": message, "exit_code": code } });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("usage", e.render().to_string().trim(), 2),
    };
    match dispatch(cli.verb) {
        Ok((outcome, run)) => {
            let status = match &outcome {
                Outcome::Passed => "ok",
                Outcome::Failed(_) => "check_failed",
            };
            if let Err(e) = run.finish(status) {
                return report(e.kind(), &e.to_string(), 1);
            }
            match outcome {
                Outcome::Passed => ExitCode::SUCCESS,
                Outcome::Failed(msg) => report("check_failed", &msg, 1),
            }
        }
        Err(e) => {
            let code = if e.is_input_error() { 2 } else { 1 };
            report(e.kind(), &e.to_string(), code)
        }
    }
}
