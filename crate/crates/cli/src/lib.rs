//! Command-line driver for `fraccap-core`: configuration, run modes and the
//! reproducible study catalogue.

pub mod config;
pub mod error;
pub mod modes;
pub mod output;
pub mod repro;

use std::path::PathBuf;

use clap::Parser;

pub use config::{Mode, Overrides, RawConfig, RunConfig, Study};
pub use error::CliError;
pub use modes::{run, Report};

#[derive(Debug, Parser)]
#[command(
    name = "fraccap",
    version,
    about = "Singularity capture and corrected time integration for fractional ODEs"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,

    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,
}

impl Cli {
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        raw.apply(&self.overrides)?;
        RunConfig::from_raw(self.mode, &raw)
    }
}

/// Parses, runs and maps the outcome to a process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = cli.run_config().and_then(|c| run(&c)).and_then(|report| {
        if report.failures.is_empty() {
            Ok(report)
        } else {
            Err(CliError::Acceptance(report.failures.join(", ")))
        }
    });
    match result {
        Ok(report) => {
            for (k, v) in &report.summary.0 {
                println!("{k} = {v}");
            }
            0
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            e.exit_code()
        }
    }
}
