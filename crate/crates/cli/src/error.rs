//! Failures of CLI commands and their exit codes.

use ellipsis_core::Error as CoreError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Core(CoreError),
    #[error("construction inconclusive: {0}")]
    Inconclusive(CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Inconclusive(_) => EXIT_INCONCLUSIVE,
            _ => EXIT_INVALID_INPUT,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    /// Construction failures become inconclusive; everything else is input.
    pub fn from_construction(e: CoreError) -> Self {
        match e {
            CoreError::Inconclusive(_)
            | CoreError::NonConstantRank { .. }
            | CoreError::Uncoverable { .. }
            | CoreError::ResidualTooLarge { .. }
            | CoreError::SingularDualSystem { .. }
            | CoreError::StageLimit { .. }
            | CoreError::MarginViolation { .. }
            | CoreError::NotElliptic { .. } => CliError::Inconclusive(e),
            other => CliError::Core(other),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}
