use alloc::string::String;

/// Errors reported by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A model was asked for something outside its capability table row.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    /// A built object was used in a way its build does not allow.
    #[error("invalid use: {0}")]
    InvalidUse(String),
    /// A least-squares problem has no well-defined solution.
    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),
    /// A computation produced a non-finite or otherwise unusable value.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
