use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {message}")]
    ConfigLine { line: usize, message: String },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: ineqpanel::Error,
    },
    #[error("{0}")]
    Core(#[from] ineqpanel::Error),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit status: 0 success, 1 partial (some rows or sections
/// errored), 2 input or configuration error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Success = 0,
    Partial = 1,
    InputError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        ExitStatus::InputError
    }
}
