use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StorageError};
use crate::http::HttpBackend;
use crate::key::ObjectKey;
use crate::local::LocalDirBackend;
use crate::memory::MemoryBackend;
use crate::retry::RetryPolicy;
use crate::token::StorageToken;

/// What a backend reports after storing an object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub octets: u64,
    pub digest: String,
}

impl Receipt {
    pub fn for_data(data: &[u8]) -> Self {
        Receipt {
            octets: data.len() as u64,
            digest: xorsplit_core::digest_hex(data),
        }
    }
}

/// One independent storage provider.
///
/// Implementations must be safe to call from several threads at once.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    /// Stores `data` under `key`, replacing any previous object atomically.
    fn put_object(&self, key: &ObjectKey, data: &[u8], token: &StorageToken) -> Result<Receipt>;

    fn get_object(&self, key: &ObjectKey, token: &StorageToken) -> Result<Vec<u8>>;

    /// Keys starting with `prefix`, in lexicographic order.
    fn list_objects(&self, prefix: &str, token: &StorageToken) -> Result<Vec<String>>;

    /// Removes `key`. Deleting an absent object succeeds.
    fn delete_object(&self, key: &ObjectKey, token: &StorageToken) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    LocalDir,
    Memory,
    Http,
}

/// Configuration of one backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendDescriptor {
    pub name: String,
    pub kind: BackendKind,
    /// Directory for `local-dir`, base URL for `http`, ignored for `memory`.
    #[serde(default)]
    pub endpoint: String,
    pub share_index: usize,
}

impl BackendDescriptor {
    pub fn open(&self, retry: RetryPolicy) -> Result<Arc<dyn Backend>> {
        Ok(match self.kind {
            BackendKind::LocalDir => Arc::new(LocalDirBackend::new(&self.name, PathBuf::from(&self.endpoint))?),
            BackendKind::Memory => Arc::new(MemoryBackend::new(&self.name)),
            BackendKind::Http => Arc::new(HttpBackend::new(&self.name, &self.endpoint, retry)?),
        })
    }
}

/// Checks that names are unique and share indices form a permutation of
/// `0..descriptors.len()`.
pub fn validate_descriptors(descriptors: &[BackendDescriptor]) -> Result<()> {
    let mut names: Vec<&str> = descriptors.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(StorageError::Other(format!("duplicate backend name {:?}", w[0])));
    }
    let mut idx: Vec<usize> = descriptors.iter().map(|d| d.share_index).collect();
    idx.sort_unstable();
    if idx != (0..descriptors.len()).collect::<Vec<_>>() {
        return Err(StorageError::Other(format!(
            "backend share indices {idx:?} are not a permutation of 0..{}",
            descriptors.len()
        )));
    }
    Ok(())
}
