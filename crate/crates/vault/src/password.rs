use std::fmt;

use zeroize::Zeroizing;

use crate::error::{Result, VaultError};

/// The master password. Wiped from memory on drop.
#[derive(Clone)]
pub struct MasterPassword(Zeroizing<String>);

impl MasterPassword {
    pub fn new(pw: impl Into<String>) -> Result<Self> {
        let pw = Zeroizing::new(pw.into());
        if pw.is_empty() {
            return Err(VaultError::InvalidInput("master password is empty".into()));
        }
        Ok(MasterPassword(pw))
    }

    /// Reads the password from environment variable `var`, if set.
    pub fn from_env(var: &str) -> Option<Result<Self>> {
        std::env::var(var).ok().map(Self::new)
    }

    pub(crate) fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Debug for MasterPassword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterPassword(<redacted>)")
    }
}
