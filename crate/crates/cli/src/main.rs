//! `plkks`: simulate reduced Ruijsenaars–Schneider flows three ways, run the
//! verification suite, print constants and Lax matrices.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error,
//! 3 degeneracy during evolution.

mod config;
mod error;
mod output;
mod show;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plkks::verify::{self, Mutation, VerifyConfig};
use plkks::Tolerances;

use crate::config::{RunConfig, RunParams};
use crate::error::{CliError, CliResult};
use crate::show::ShowWhat;

#[derive(Debug, Parser)]
#[command(
    name = "plkks",
    version,
    about = "Ruijsenaars–Schneider flows from Poisson–Lie reduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve an initial point and write the trajectory as JSON or CSV.
    ///
    /// Parameters come from flags, then from the --config file, then from
    /// defaults (mu = 1:1,-1:-1, t-end = 1, samples = 21, engine = double,
    /// seed = 0, format = json). Missing q0/p0 are filled randomly from the
    /// seed.
    Simulate {
        /// Flat `key = value` file with the same keys as the flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: RunParams,
    },
    /// Run the randomized property suite over every layer.
    Verify {
        /// Largest matrix size, in [2, 8].
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Halve every tolerance.
        #[arg(long)]
        strict: bool,
        /// Also write the report as JSON to this path.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Inject a deliberate fault (zeta-half, zeta-sign, nu-offdiag,
        /// zeta-coefficient=<c>).
        #[arg(long, hide = true)]
        mutate: Option<String>,
    },
    /// Print a constant, matrix or Hamiltonian with 15 significant digits.
    Show {
        #[arg(value_enum)]
        what: ShowWhat,
        #[command(flatten)]
        params: RunParams,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let tol = Tolerances::default();
    match cli.command {
        Command::Simulate { config, params } => {
            let base = match config {
                Some(path) => RunParams::from_file(&path)?,
                None => RunParams::default(),
            };
            let cfg = RunConfig::from_params(params.over(base), &tol)?;
            simulate::simulate(&cfg, &tol)
        }
        Command::Verify {
            n_max,
            seed,
            strict,
            json,
            mutate,
        } => {
            if !(2..=8).contains(&n_max) {
                return Err(CliError::Usage(format!("--n-max must lie in [2, 8], got {n_max}")));
            }
            let mutation = mutate
                .map(|m| m.parse::<Mutation>())
                .transpose()
                .map_err(|e| CliError::Usage(format!("--mutate: {e}")))?;
            let report = verify::run(&VerifyConfig {
                n_max,
                seed,
                strict,
                mutation,
            })?;
            println!("{report}");
            if let Some(path) = json {
                let bytes =
                    output::to_json(&report).map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
                std::fs::write(&path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))?;
            }
            if report.passed() {
                Ok(())
            } else {
                for r in report.failures() {
                    eprintln!(
                        "failed: {} / {}: worst residual {:e} exceeds {:e}",
                        r.module, r.property, r.worst_residual, r.tolerance
                    );
                }
                Err(CliError::VerifyFailed)
            }
        }
        Command::Show { what, params } => show::show(what, &params, &tol),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plkks: {e}");
            e.exit_code()
        }
    }
}
