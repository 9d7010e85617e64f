use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("line {line} of {path}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for invalid input, 3 for numerical or training failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Parse { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<brfp::Error> for CliError {
    fn from(e: brfp::Error) -> Self {
        match e {
            brfp::Error::InvalidInput(_) | brfp::Error::Resource(_) => CliError::Validation(e.to_string()),
            brfp::Error::Numerical(_) | brfp::Error::Training(_) => CliError::Numerical(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
