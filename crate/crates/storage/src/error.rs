use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StorageError {
    #[error("{backend}: authentication rejected")]
    AuthRejected { backend: String },

    #[error("{backend}: unavailable: {reason}")]
    Unavailable { backend: String, reason: String },

    #[error("{backend}: object {key} not found")]
    NotFound { backend: String, key: String },

    #[error("{backend}: object of {size} octets exceeds the size limit")]
    QuotaExceeded { backend: String, size: u64 },

    #[error("{backend}: request throttled")]
    Throttled { backend: String },

    #[error("{backend}: object {key} failed its digest check")]
    Integrity { backend: String, key: String },

    #[error("need {needed} shares, only {available} usable: {}", join(causes))]
    InsufficientShares {
        needed: usize,
        available: usize,
        causes: Vec<StorageError>,
    },

    #[error("invalid object key {0:?}")]
    InvalidKey(String),

    #[error("{0}")]
    Other(String),
}

impl StorageError {
    /// Whether a retry could succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, StorageError::Unavailable { .. } | StorageError::Throttled { .. })
    }

    pub fn is_auth(&self) -> bool {
        matches!(self, StorageError::AuthRejected { .. })
    }
}

pub type Result<T, E = StorageError> = std::result::Result<T, E>;

fn join(causes: &[StorageError]) -> String {
    if causes.is_empty() {
        return "no backends configured".into();
    }
    causes.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
