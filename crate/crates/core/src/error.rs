use thiserror::Error;

/// Errors raised by the sharing primitives and the file pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid threshold parameters: {0}")]
    InvalidParams(String),

    #[error("insufficient shares: need {needed}, got {got}")]
    InsufficientShares { needed: usize, got: usize },

    /// The generation system could not be inverted for the chosen share
    /// subset. Valid parameters never produce this.
    #[error("reconstruction system is singular for shares {indices:?}")]
    Singular { indices: Vec<usize> },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("shares unavailable, missing indices {missing:?}")]
    Unavailable { missing: Vec<usize> },

    #[error("randomness source failed: {0}")]
    Randomness(String),

    #[error("manifest encoding: {0}")]
    Manifest(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
