use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONDITION: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] attention_core::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use attention_core::Error as E;
        match self {
            CliError::Core(E::AssumptionViolated(_) | E::ConditionNotVerified(_)) => EXIT_CONDITION,
            CliError::Core(E::RoundLimitExceeded(_) | E::BudgetExceeded { .. }) => EXIT_LIMIT,
            _ => EXIT_INPUT,
        }
    }
}
