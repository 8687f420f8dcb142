use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScsaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, ScsaError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ScsaError {
    ScsaError::InvalidArgument(msg.into())
}
