//! `recordlab`: command-line front end for exact and simulated record statistics.
//!
//! Output is CSV (or an aligned table with `--format pretty`) preceded by
//! `# key=value` lines that echo every resolved setting, including a `rerun=`
//! line that reproduces the run byte for byte.
//!
//! Exit codes: 0 success, 1 failed validation checks or I/O, 2 usage or input
//! validation, 3 numerical non-convergence.

// `!(a < b)` is the NaN-rejecting form of the range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod input;
mod table;
mod validate;

use args::Cli;
use clap::Parser;
use error::{CliError, CliResult};
use std::io::Write;
use std::process::ExitCode;

/// Caps the worker pool when set to a positive integer.
const THREADS_ENV: &str = "RECORDLAB_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| error::usage(THREADS_ENV, format!("'{v}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| error::usage(THREADS_ENV, e))
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.global.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Io { path: "stdout".into(), msg: e.to_string() })
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    configure_threads()?;
    let table = commands::run(cli)?;
    emit(cli, &table::render(cli, &table))?;
    if let Some((failed, total)) = table.checks {
        if failed > 0 {
            return Err(CliError::ChecksFailed { failed, total });
        }
    }
    if table.unconverged > 0 {
        return Err(CliError::NotConverged { count: table.unconverged });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("recordlab {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
