//! Command-line front end: `simulate`, `sweep`, `baselines` and `fit`.
//!
//! Exit status is 0 on success, 1 when a computation or output write
//! fails, and 2 for invalid input, configuration or file schemas.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use config::{Defaults, RunConfig, Settings};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "phaseforge",
    version,
    about = "Adaptive photon-counting phase estimation of coherent states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one Monte Carlo ensemble.
    Simulate(Settings),
    /// Tabulate the reference variance bounds.
    Baselines(Settings),
    /// Fit convergence and asymptotic models to curve or sweep tables.
    Fit(Settings),
    /// Run ensembles over every combination of α², L and m.
    Sweep(Settings),
}

fn defaults(command: &Command) -> Defaults {
    match command {
        Command::Baselines(_) => Defaults {
            alpha_sq: commands::BASELINE_ALPHA_SQ.to_vec(),
            steps: vec![200],
            pnr: vec![1],
        },
        Command::Sweep(_) => Defaults {
            alpha_sq: vec![1.0],
            steps: (1..=10).map(|i| 20 * i).collect(),
            pnr: vec![1],
        },
        Command::Simulate(_) | Command::Fit(_) => Defaults {
            alpha_sq: vec![1.0],
            steps: vec![200],
            pnr: vec![1],
        },
    }
}

/// Executes a parsed command line and returns the files written.
pub fn execute(cli: Cli) -> Result<Vec<std::path::PathBuf>, CliError> {
    let threads = config::threads_from_env()?;
    let defaults = defaults(&cli.command);
    match cli.command {
        Command::Simulate(s) => commands::simulate(&RunConfig::resolve(s, defaults, threads)?),
        Command::Baselines(s) => commands::baselines(&RunConfig::resolve(s, defaults, threads)?),
        Command::Fit(s) => commands::fit(&RunConfig::resolve(s, defaults, threads)?),
        Command::Sweep(s) => commands::sweep(&RunConfig::resolve(s, defaults, threads)?),
    }
}

/// Parses `args` (program name first), runs, and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::EXIT_INPUT } else { 0 };
        }
    };
    match execute(cli) {
        Ok(paths) => {
            for path in paths {
                println!("{}", path.display());
            }
            0
        }
        Err(e) => {
            eprintln!("phaseforge: {e}");
            e.exit_code()
        }
    }
}
