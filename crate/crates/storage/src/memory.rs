use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::RwLock;

use crate::backend::{Backend, Receipt};
use crate::error::{Result, StorageError};
use crate::key::ObjectKey;
use crate::token::StorageToken;

/// In-process backend, mainly for tests. Accepts any token unless a set of
/// accepted tokens is configured.
#[derive(Debug)]
pub struct MemoryBackend {
    name: String,
    objects: RwLock<BTreeMap<String, Vec<u8>>>,
    accepted: Option<HashSet<String>>,
    down: AtomicBool,
}

impl MemoryBackend {
    pub fn new(name: &str) -> Self {
        MemoryBackend {
            name: name.to_string(),
            objects: RwLock::default(),
            accepted: None,
            down: AtomicBool::new(false),
        }
    }

    pub fn with_tokens<'a>(name: &str, tokens: impl IntoIterator<Item = &'a StorageToken>) -> Self {
        MemoryBackend {
            accepted: Some(tokens.into_iter().map(|t| t.expose().to_string()).collect()),
            ..Self::new(name)
        }
    }

    pub fn set_down(&self, down: bool) {
        self.down.store(down, Ordering::SeqCst);
    }

    /// Direct access for fault injection in tests.
    pub fn tamper(&self, key: &str, f: impl FnOnce(&mut Vec<u8>)) -> bool {
        match self.objects.write().unwrap().get_mut(key) {
            Some(v) => {
                f(v);
                true
            }
            None => false,
        }
    }

    fn check(&self, token: &StorageToken) -> Result<()> {
        if self.down.load(Ordering::SeqCst) {
            return Err(StorageError::Unavailable {
                backend: self.name.clone(),
                reason: "backend marked down".into(),
            });
        }
        if let Some(accepted) = &self.accepted {
            if !accepted.contains(token.expose()) {
                return Err(StorageError::AuthRejected {
                    backend: self.name.clone(),
                });
            }
        }
        Ok(())
    }
}

impl Backend for MemoryBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn put_object(&self, key: &ObjectKey, data: &[u8], token: &StorageToken) -> Result<Receipt> {
        self.check(token)?;
        self.objects
            .write()
            .unwrap()
            .insert(key.as_str().to_string(), data.to_vec());
        Ok(Receipt::for_data(data))
    }

    fn get_object(&self, key: &ObjectKey, token: &StorageToken) -> Result<Vec<u8>> {
        self.check(token)?;
        self.objects
            .read()
            .unwrap()
            .get(key.as_str())
            .cloned()
            .ok_or_else(|| StorageError::NotFound {
                backend: self.name.clone(),
                key: key.to_string(),
            })
    }

    fn list_objects(&self, prefix: &str, token: &StorageToken) -> Result<Vec<String>> {
        self.check(token)?;
        Ok(self
            .objects
            .read()
            .unwrap()
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.clone())
            .collect())
    }

    fn delete_object(&self, key: &ObjectKey, token: &StorageToken) -> Result<()> {
        self.check(token)?;
        self.objects.write().unwrap().remove(key.as_str());
        Ok(())
    }
}
