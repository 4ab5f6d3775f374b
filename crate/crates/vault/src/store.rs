use std::collections::BTreeMap;

use xorsplit_storage::StorageToken;

use crate::error::{Result, VaultError};

/// Anything that keeps tokens by name: the local [`Vault`](crate::Vault) or
/// a client for an external password manager.
pub trait TokenStore {
    fn store_token(&mut self, name: &str, tok: StorageToken) -> Result<()>;
    fn fetch_token(&mut self, name: &str) -> Result<StorageToken>;
}

/// A token store that lives only in memory.
#[derive(Debug)]
pub struct MemoryTokenStore {
    entries: BTreeMap<String, StorageToken>,
    available: bool,
}

impl MemoryTokenStore {
    pub fn new() -> Self {
        MemoryTokenStore {
            entries: BTreeMap::new(),
            available: true,
        }
    }

    /// Simulates an unreachable remote manager.
    pub fn set_available(&mut self, available: bool) {
        self.available = available;
    }

    fn check(&self) -> Result<()> {
        if self.available {
            Ok(())
        } else {
            Err(VaultError::Unavailable { needed: 1, got: 0 })
        }
    }
}

impl Default for MemoryTokenStore {
    fn default() -> Self {
        Self::new()
    }
}

impl TokenStore for MemoryTokenStore {
    fn store_token(&mut self, name: &str, tok: StorageToken) -> Result<()> {
        self.check()?;
        self.entries.insert(name.to_string(), tok);
        Ok(())
    }

    fn fetch_token(&mut self, name: &str) -> Result<StorageToken> {
        self.check()?;
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| VaultError::UnknownName(name.to_string()))
    }
}
