use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum AppError {
    /// Invalid configuration or parameters; exit 2.
    #[error("config error: {0}")]
    Config(String),
    /// Unreadable or malformed input data; exit 3.
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) | AppError::Io { .. } => 3,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<pcmxbar_core::Error> for AppError {
    fn from(e: pcmxbar_core::Error) -> Self {
        use pcmxbar_core::Error as E;
        match e {
            E::Config(_) | E::Argument(_) | E::Domain(_) => AppError::Config(e.to_string()),
            E::State(_) => AppError::Data(e.to_string()),
        }
    }
}

impl From<csv::Error> for AppError {
    fn from(e: csv::Error) -> Self {
        AppError::Data(e.to_string())
    }
}
