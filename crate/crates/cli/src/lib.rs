//! Command line front end for `thermistor-fem`: single runs with trajectory
//! dumps, convergence studies, scheme comparisons and data validation.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::{Cli, Command};

/// Failure of a command; usage problems exit with 2, everything else with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<thermistor_fem::Error> for CliError {
    fn from(e: thermistor_fem::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => commands::cmd_run(a),
        Command::Converge(a) => commands::cmd_converge(a),
        Command::Compare(a) => commands::cmd_compare(a),
        Command::Validate(a) => commands::cmd_validate(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
