//! `memrk` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage errors (bad flags, invalid
//! configuration, missing seeds), 2 on numerical or domain errors. All
//! diagnostics go to standard error.

mod args;
mod commands;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use memrk_core::Error;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Domain(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Domain(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Bench(a) => commands::bench(a),
        Command::Tomo(a) => commands::tomo(a),
        Command::Theory(a) => commands::theory(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memrk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
