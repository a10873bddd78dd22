use std::path::PathBuf;

use clearsky_core::Error as CoreError;

/// Errors of the file formats, data loaders and command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// A located problem in a text or binary input.
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse { path: path.into(), line, message: message.into() }
    }

    /// Process exit code: 1 for I/O, parse and input errors, 2 for
    /// capability violations, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } | AppError::Parse { .. } => 1,
            AppError::Core(CoreError::InvalidInput(_)) => 1,
            AppError::Core(CoreError::Unsupported(_) | CoreError::InvalidUse(_)) => 2,
            AppError::Core(CoreError::Numeric(_) | CoreError::IllConditioned(_)) => 3,
        }
    }
}
