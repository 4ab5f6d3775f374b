//! Process exit codes.
//!
//! | code | meaning                                                     |
//! |------|-------------------------------------------------------------|
//! | 0    | success                                                     |
//! | 1    | usage, configuration or local I/O error                     |
//! | 2    | partial upload; some backends are missing objects (resume)  |
//! | 3    | authentication failed (master password or backend token)    |
//! | 4    | too few backends reachable or valid                         |
//! | 5    | verification found tampered or inconsistent data            |

use std::fmt;

use xorsplit_storage::StorageError;
use xorsplit_vault::VaultError;

pub const OK: i32 = 0;
pub const ERROR: i32 = 1;
pub const PARTIAL: i32 = 2;
pub const AUTH: i32 = 3;
pub const UNAVAILABLE: i32 = 4;
pub const VERIFY_FAILED: i32 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ERROR, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<VaultError> for CliError {
    fn from(e: VaultError) -> Self {
        let code = match e {
            VaultError::WrongPassword | VaultError::UnknownName(_) => AUTH,
            VaultError::Unavailable { .. } => UNAVAILABLE,
            _ => ERROR,
        };
        CliError::new(code, format!("vault: {e}"))
    }
}

impl From<StorageError> for CliError {
    fn from(e: StorageError) -> Self {
        let code = match &e {
            StorageError::AuthRejected { .. } => AUTH,
            StorageError::InsufficientShares { .. }
            | StorageError::Unavailable { .. }
            | StorageError::Throttled { .. } => UNAVAILABLE,
            _ => ERROR,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<xorsplit_core::Error> for CliError {
    fn from(e: xorsplit_core::Error) -> Self {
        let code = match e {
            xorsplit_core::Error::Unavailable { .. } | xorsplit_core::Error::InsufficientShares { .. } => UNAVAILABLE,
            xorsplit_core::Error::Integrity(_) => VERIFY_FAILED,
            _ => ERROR,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<xorsplit_bench::BenchError> for CliError {
    fn from(e: xorsplit_bench::BenchError) -> Self {
        CliError::usage(format!("bench: {e}"))
    }
}
