use std::fmt;

use streche_bench::BenchError;
use streche_core::Error as CoreError;

/// A command failure, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or input files. Exit code 1.
    Usage(String),
    /// Verification or benchmark failure. Exit code 2.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failure(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "failed: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParams(_)
            | CoreError::MessageOutOfRange(_)
            | CoreError::NonInteger(_)
            | CoreError::BudgetOverflow(_)
            | CoreError::Capacity(_)
            | CoreError::Precision { .. }
            | CoreError::Malformed(_)
            | CoreError::IncompatibleBase(_)
            | CoreError::Capability(_)
            | CoreError::Serialization(_)
            | CoreError::BackendMismatch { .. }
            | CoreError::Io(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Core(inner) => inner.into(),
            BenchError::Verification { .. } => CliError::Failure(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}
