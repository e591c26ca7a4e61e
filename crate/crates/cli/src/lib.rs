//! Command-line front end for `clusterbell`.
//!
//! Every command produces a [`report::RunReport`]: a sorted key-value tree
//! rendered either as an indented table or as JSON. The report body depends
//! only on the invocation, so re-running a command with the same seed gives a
//! byte-identical body. Wall-clock timing is kept outside the body.
//!
//! Exit codes: 0 success, 1 a reproduction check failed, 2 usage or parse
//! error, 3 a resource ceiling was hit.

pub mod args;
pub mod commands;
pub mod paper;
pub mod report;

use std::time::Instant;

use clap::Parser;

use crate::args::Cli;
use crate::report::RunReport;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(clusterbell::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_resource_limit() => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<clusterbell::Error> for CliError {
    fn from(e: clusterbell::Error) -> Self {
        CliError::Core(e)
    }
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Runs one invocation; `args[0]` is the program name.
pub fn run(args: &[String]) -> Outcome {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: EXIT_OK,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let start = Instant::now();
    match commands::dispatch(&cli) {
        Ok(body) => {
            let code = if body.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
            let report = RunReport::new(args.get(1..).unwrap_or_default(), body, start.elapsed());
            let stdout = if cli.json { report.to_json() } else { report.to_table() };
            Outcome {
                code,
                stdout,
                stderr: String::new(),
            }
        }
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}
