//! Command-line driver: parses flags and an optional JSON config, evaluates
//! single points, sweeps or the table grids, and writes CSV.
//!
//! Exit status: 0 when every row converged, 2 when some row did not (the
//! rows are still written), 1 on invalid configuration.

pub mod config;
pub mod run;

pub use config::{Command, Field, RunConfig, ScanAxis, ScanGrid};
pub use run::{execute, run, Report};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Args(#[from] clap::Error),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Runs the driver on command-line arguments (program name first) and
/// returns the process exit status, printing diagnostics to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let outcome = RunConfig::from_args(args).and_then(|config| run(&config));
    match outcome {
        Ok(report) if report.converged => EXIT_OK,
        Ok(_) => {
            eprintln!("warning: some rows did not converge; see the converged column");
            EXIT_PARTIAL
        }
        Err(CliError::Args(e)) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            EXIT_OK
        }
        Err(CliError::Args(e)) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            EXIT_INVALID
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
