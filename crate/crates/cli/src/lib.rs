//! Command-line front end: configuration, the worked examples, CSV/JSON/SVG
//! output.

pub mod commands;
pub mod config;
pub mod plot;
pub mod report;

pub use commands::{run, Cli};

/// Failure classes, mapped onto process exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad parameters or configuration; exit code 2.
    Invalid(String),
    /// A numerical failure or a failed check; exit code 1.
    Numerical(String),
    /// Unreadable or unwritable paths; exit code 2.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Invalid(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(s) | CliError::Numerical(s) | CliError::Io(s) => f.write_str(s),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fracmanifold::Error> for CliError {
    fn from(e: fracmanifold::Error) -> Self {
        if e.is_invalid_input() {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}
