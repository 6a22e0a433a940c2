//! CLI error categories, mapped onto process exit codes.

use std::fmt;

/// Exit codes: 0 success, 1 usage, 2 validation, 3 runtime/numeric.
#[derive(Debug)]
pub enum CliError {
    /// Malformed invocation (bad flags, unknown subcommand).
    Usage(String),
    /// Inputs that parse but violate the data contracts (bad config,
    /// invalid scene files, mismatched scene sets).
    Validation(String),
    /// I/O failures and numeric breakdowns during execution.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
