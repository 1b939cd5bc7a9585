//! Command-line front end for the `cvconj` simulator.

// `!(x > 0)` is used on purpose so that NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod serialize;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use crate::config::{Cli, ExperimentConfig};
use crate::error::CliError;

/// Runs the command and writes the report to `--out` or `stdout`.
pub fn run(config: &ExperimentConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(|| commands::execute(config))?,
        None => commands::execute(config)?,
    };
    match &config.out {
        Some(path) => std::fs::write(path, text.as_bytes())?,
        None => {
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Full CLI behaviour behind an injectable argv and output streams; returns
/// the process exit code.
pub fn run_with_args<I, A>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let rendered = e.render().to_string();
                    let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                    let _ = writeln!(stderr, "cvconj: {}", line.trim_start_matches("error: "));
                    2
                }
            };
        }
    };
    match ExperimentConfig::from_cli(cli).and_then(|c| run(&c, stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "cvconj: {e}");
            e.exit_code()
        }
    }
}
