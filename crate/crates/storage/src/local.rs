use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use rand::RngExt;

use crate::backend::{Backend, Receipt};
use crate::error::{Result, StorageError};
use crate::key::ObjectKey;
use crate::token::StorageToken;

/// One file per key under a root directory. Tokens are not checked;
/// access control is the filesystem's.
#[derive(Debug)]
pub struct LocalDirBackend {
    name: String,
    root: PathBuf,
}

impl LocalDirBackend {
    pub fn new(name: &str, root: PathBuf) -> Result<Self> {
        fs::create_dir_all(&root).map_err(|e| StorageError::Unavailable {
            backend: name.to_string(),
            reason: format!("cannot create {}: {e}", root.display()),
        })?;
        Ok(LocalDirBackend {
            name: name.to_string(),
            root,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Object keys are restricted to `[A-Za-z0-9_.-]` without leading dots,
    /// so the key is usable as a relative file name as is.
    fn path_for(&self, key: &ObjectKey) -> Result<PathBuf> {
        let k = key.as_str();
        if k.starts_with('.') || k.contains('/') || k.contains('\\') || k.contains("..") {
            return Err(StorageError::InvalidKey(k.to_string()));
        }
        Ok(self.root.join(k))
    }

    fn io_err(&self, e: std::io::Error) -> StorageError {
        StorageError::Unavailable {
            backend: self.name.clone(),
            reason: e.to_string(),
        }
    }
}

impl Backend for LocalDirBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn put_object(&self, key: &ObjectKey, data: &[u8], _token: &StorageToken) -> Result<Receipt> {
        let dest = self.path_for(key)?;
        let tmp = self.root.join(format!(".tmp-{:016x}", rand::rng().random::<u64>()));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(data)?;
            f.sync_all()?;
            fs::rename(&tmp, &dest)
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            self.io_err(e)
        })?;
        Ok(Receipt::for_data(data))
    }

    fn get_object(&self, key: &ObjectKey, _token: &StorageToken) -> Result<Vec<u8>> {
        match fs::read(self.path_for(key)?) {
            Ok(v) => Ok(v),
            Err(e) if e.kind() == ErrorKind::NotFound => Err(StorageError::NotFound {
                backend: self.name.clone(),
                key: key.to_string(),
            }),
            Err(e) => Err(self.io_err(e)),
        }
    }

    fn list_objects(&self, prefix: &str, _token: &StorageToken) -> Result<Vec<String>> {
        let mut keys = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| self.io_err(e))? {
            let entry = entry.map_err(|e| self.io_err(e))?;
            if let Some(name) = entry.file_name().to_str() {
                if !name.starts_with('.') && name.starts_with(prefix) {
                    keys.push(name.to_string());
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    fn delete_object(&self, key: &ObjectKey, _token: &StorageToken) -> Result<()> {
        match fs::remove_file(self.path_for(key)?) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(()),
            Err(e) => Err(self.io_err(e)),
        }
    }
}
