//! Command-line front end: config parsing, experiment dispatch and output.

pub mod config;
pub mod error;
pub mod run;

use std::ffi::OsString;
use std::process::ExitCode;

pub use config::{cli, expand_list, Axis, Experiment, ExperimentConfig, Format, JOBS_ENV};
pub use error::{CliError, Result};
pub use run::{emit_curve, run_experiment, Failure, RunOutcome, SweepRow};

/// Full program: parse, run, report. Usage errors exit through clap.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let command = matches.subcommand_name().unwrap_or_default().to_string();
    let result = ExperimentConfig::from_matches(&matches)
        .and_then(|cfg| run_experiment(&cfg, &mut std::io::stdout().lock()));
    match result {
        Ok(outcome) if outcome.passed() => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("{}", outcome.failure_report(&command));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("final-iterate {command}: {e}");
            e.exit_code()
        }
    }
}
