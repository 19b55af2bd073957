use std::path::PathBuf;

use thiserror::Error;

/// Failures the command-line driver reports. Each maps to an exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or flags.
    #[error("{0}")]
    Validation(String),
    /// Input files that do not parse or do not join.
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Data(_) | CliError::Io { .. } => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
