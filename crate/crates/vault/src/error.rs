use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VaultError {
    #[error("{0} already exists")]
    Exists(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The file is damaged or was modified.
    #[error("vault integrity check failed: {0}")]
    Integrity(String),

    #[error("unsupported vault format version {0}")]
    UnsupportedVersion(u16),

    #[error("wrong master password")]
    WrongPassword,

    #[error("no token stored under {0:?}")]
    UnknownName(String),

    #[error("vault session expired; unlock again")]
    SessionExpired,

    #[error("need {needed} token shards, only {got} usable")]
    Unavailable { needed: usize, got: usize },

    #[error("{0}")]
    InvalidInput(String),

    #[error("key derivation failed: {0}")]
    Kdf(String),

    #[error("randomness source failed: {0}")]
    Randomness(String),
}

pub type Result<T, E = VaultError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> VaultError + '_ {
    move |source| VaultError::Io {
        path: path.to_path_buf(),
        source,
    }
}
