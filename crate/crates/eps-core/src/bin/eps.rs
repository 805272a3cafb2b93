//! `eps`: build factorized phase-space states of the harmonic oscillator,
//! transform them to Wigner/Husimi distributions, verify the residual
//! identities they satisfy, run exact symbolic derivations, and propagate
//! them in time.
//!
//! All numerical work is configured through one JSON file (`--config`);
//! every omitted key has a documented default, and outputs are
//! deterministic: the same configuration produces byte-identical files.
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration
//! error (with a JSON diagnostic on stderr).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eps_core::algebra::ExtensionMethod;
use eps_core::cli::{
    cmd_algebra, cmd_evolve, cmd_state, cmd_transform, cmd_verify, thread_cap_from_env,
    AlgebraAction, RoutePath, RunConfig, TransformKind, VerifySuite,
};
use eps_core::error::Error;

#[derive(Parser)]
#[command(
    name = "eps",
    version,
    about = "Phase-space oscillator laboratory: states, distributions, residual checks, exact operator algebra, and time evolution",
    after_help = "EPS_THREADS caps worker parallelism (computation is currently \
single-threaded, so any positive value is accepted and results never depend on it)."
)]
struct Cli {
    /// JSON run configuration; omitted keys take the documented defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Where to write artifacts (overrides the config's output_dir)
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the phase-space state at t = 0 and write chi/psi/phi
    State,
    /// Build a quasiprobability distribution and write it
    Transform {
        /// wigner | husimi | qfunction
        #[arg(long)]
        kind: String,
        /// convolution | diffop
        #[arg(long, default_value = "convolution")]
        path: String,
        /// Truncation order for the diffop path (auto-selected when omitted)
        #[arg(long)]
        order: Option<usize>,
    },
    /// Run residual suites and write verify.json
    Verify {
        /// hj | imag | qrep | eps-eq | all
        #[arg(long)]
        suite: String,
        /// Count skipped checks as failures
        #[arg(long)]
        strict: bool,
        /// Negative control: flip a sign inside the phase-equation check so
        /// it must fail
        #[arg(long)]
        debug_wrong_sign: bool,
    },
    /// Exact symbolic derivations on the operator algebra
    Algebra {
        #[command(subcommand)]
        action: AlgebraCommand,
    },
    /// Propagate the configured state and write trajectory.csv
    Evolve,
}

#[derive(Subcommand)]
enum AlgebraCommand {
    /// Lift a classical Hamiltonian to its phase-space generator
    Extend {
        /// Expression in q, p, e.g. "p^2/(2*m) + (k/2)*q^2"
        expr: String,
        /// shift | series (the two equivalent builders)
        #[arg(long, default_value = "shift")]
        method: String,
    },
    /// Conjugate the classical flow by the Gaussian smoothing exponent
    Bch {
        /// Run the built-in harmonic derivation
        #[arg(long)]
        wigner_harmonic: bool,
    },
    /// Substitute a width into an expression (default: the bch result)
    Specialize {
        /// "q-function" or an exact number
        #[arg(long)]
        f: String,
        /// Expression to specialize (defaults to the bch result)
        #[arg(long)]
        expr: Option<String>,
    },
    /// Commutator of two expressions
    Commutator { a: String, b: String },
}

fn diagnostic(err: &Error) -> String {
    serde_json::json!({
        "error": format!("{err:?}").split('(').next().unwrap_or("Error").trim().to_string(),
        "message": err.to_string(),
    })
    .to_string()
}

fn run(cli: Cli) -> Result<i32, Error> {
    thread_cap_from_env(std::env::var("EPS_THREADS").ok().as_deref())?;
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_json("{}")?,
    };
    let out_dir = cli.output_dir.clone().unwrap_or_else(|| config.output_dir());

    match &cli.command {
        Command::State => {
            let files = cmd_state(&config, &out_dir)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
        Command::Transform { kind, path, order } => {
            let outcome = cmd_transform(
                &config,
                TransformKind::parse(kind)?,
                RoutePath::parse(path)?,
                *order,
                &out_dir,
            )?;
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if let Some(report) = &outcome.report {
                if let Some(d) = report.discrepancy_vs_convolution {
                    println!("cross_path_discrepancy = {d:e}");
                }
            }
            Ok(0)
        }
        Command::Verify { suite, strict, debug_wrong_sign } => {
            let report = cmd_verify(
                &config,
                VerifySuite::parse(suite)?,
                *strict,
                *debug_wrong_sign,
                &out_dir,
            )?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .expect("verification report serializes")
            );
            Ok(report.exit_code())
        }
        Command::Algebra { action } => {
            let action = match action {
                AlgebraCommand::Extend { expr, method } => AlgebraAction::Extend {
                    expr: expr.clone(),
                    method: match method.as_str() {
                        "shift" => ExtensionMethod::Shift,
                        "series" => ExtensionMethod::Series,
                        other => {
                            return Err(Error::Config(format!(
                                "unknown extension method \"{other}\"; expected shift or series"
                            )))
                        }
                    },
                },
                AlgebraCommand::Bch { wigner_harmonic } => {
                    AlgebraAction::Bch { wigner_harmonic: *wigner_harmonic }
                }
                AlgebraCommand::Specialize { f, expr } => {
                    AlgebraAction::Specialize { f: f.clone(), expr: expr.clone() }
                }
                AlgebraCommand::Commutator { a, b } => {
                    AlgebraAction::Commutator { a: a.clone(), b: b.clone() }
                }
            };
            println!("{}", cmd_algebra(&action)?);
            Ok(0)
        }
        Command::Evolve => {
            let files = cmd_evolve(&config, &out_dir)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("{}", diagnostic(&err));
            ExitCode::from(2)
        }
    }
}
