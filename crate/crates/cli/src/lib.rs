//! Command-line front end for the batch scheduling solver.
//!
//! Every subcommand writes its regular output to the supplied writer and
//! reports failures through [`CliError`], which maps to the process exit code.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

mod args;
pub mod bench;
pub mod commands;
pub mod gantt;
pub mod report;

pub use args::{Cli, Command, Grouping, Profile, ToggleFlags};

#[derive(Debug)]
pub enum CliError {
    /// Bad command line or unusable input selection. Exit code 2.
    Usage(String),
    /// The command ran but the data or the solver failed. Exit code 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<batchsched_core::Error> for CliError {
    fn from(e: batchsched_core::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Executes a parsed command.
pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => commands::generate(&a, out),
        Command::Solve(a) => commands::solve(&a, out),
        Command::Evaluate(a) => commands::evaluate(&a, out),
        Command::Bench(a) => bench::cmd_bench(&a, out),
        Command::Report(a) => report::cmd_report(&a, out),
        Command::Gantt(a) => gantt::cmd_gantt(&a, out),
        Command::Verify(a) => commands::verify(&a, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Errors go to stderr.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli, out).and_then(|_| out.flush().map_err(CliError::from)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
