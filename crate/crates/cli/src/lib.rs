//! Command-line front end for `farm-pricer`.
//!
//! [`run`] parses arguments, dispatches a subcommand and maps failures to
//! exit codes: 0 on success, 2 for bad input, 3 when a solver fails.

pub mod args;
pub mod commands;
pub mod config;
pub mod figures;
mod output;

use std::ffi::OsString;
use std::io::{self, Write};

use clap::Parser;
use thiserror::Error;

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Environment variable capping the rayon worker count.
pub const THREADS_ENV: &str = "FARM_PRICER_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(farm_pricer::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl From<farm_pricer::Error> for CliError {
    fn from(e: farm_pricer::Error) -> Self {
        match e {
            farm_pricer::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) | CliError::Io(_) => EXIT_SOLVER,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}: expected a positive integer, got `{raw}`")))?;
    // A pool already built by an earlier call in the same process is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs a parsed command, writing the primary output to `out` (or to the
/// `--out` path) and returning the one-line summary.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<String, CliError> {
    init_threads()?;
    commands::dispatch(cli.command, out)
}

/// Full entry point: parses `argv`, runs, prints the summary to stderr and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(summary) => {
            let _ = lock.flush();
            eprintln!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("farm-pricer: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_parameter_is_a_config_error() {
        let e: CliError = farm_pricer::ValuationDist::exponential(-1.0).unwrap_err().into();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        let e: CliError = farm_pricer::Error::SingularChain.into();
        assert_eq!(e.exit_code(), EXIT_SOLVER);
    }

    #[test]
    fn help_and_usage_codes() {
        assert_eq!(run(["farm-pricer", "--help"]), EXIT_OK);
        assert_eq!(run(["farm-pricer", "no-such-command"]), EXIT_CONFIG);
        assert_eq!(run(["farm-pricer", "uniform", "--k", "x"]), EXIT_CONFIG);
    }
}
