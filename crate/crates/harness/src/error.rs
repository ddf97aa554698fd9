use std::path::PathBuf;

use nlslab::NlsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numerics(#[from] NlsError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run ended early: {0}")]
    Terminated(String),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 early termination, 3 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } | HarnessError::Config(_) | HarnessError::Numerics(_) => 1,
            HarnessError::Terminated(_) => 2,
            HarnessError::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
