//! CLI failures and their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag value or input file; the message names the flag.
    #[error("{flag}: {msg}")]
    Usage { flag: String, msg: String },
    #[error(transparent)]
    Core(#[from] recordlab::Error),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{failed} of {total} validation checks failed")]
    ChecksFailed { failed: usize, total: usize },
    #[error("{count} estimate(s) stopped on the evaluation budget before reaching the tolerance")]
    NotConverged { count: usize },
}

impl CliError {
    /// 1: failed checks or I/O, 2: usage or validation, 3: numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        use recordlab::Error as E;
        match self {
            CliError::Usage { .. } => 2,
            CliError::Core(E::TailNotConverged { .. } | E::DegenerateNormalization { .. } | E::AcceptanceTooLow { .. } | E::InsufficientExceedances { .. }) => {
                3
            }
            CliError::Core(_) => 2,
            CliError::NotConverged { .. } => 3,
            CliError::Io { .. } | CliError::ChecksFailed { .. } => 1,
        }
    }
}

pub fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage { flag: flag.to_string(), msg: msg.to_string() }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
