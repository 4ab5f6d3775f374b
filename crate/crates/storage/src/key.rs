use std::fmt;

use crate::error::{Result, StorageError};

/// Name of a stored object: `<file_id>.c<tag>.s<index>` for a share or
/// `<file_id>.manifest` for a manifest replica.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectKey(String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind<'a> {
    Share {
        file_id: &'a str,
        chunk_tag: u32,
        share_index: usize,
    },
    Manifest {
        file_id: &'a str,
    },
}

impl ObjectKey {
    pub fn share(file_id: &str, chunk_tag: u32, share_index: usize) -> Result<Self> {
        check_file_id(file_id)?;
        Ok(ObjectKey(format!("{file_id}.c{chunk_tag}.s{share_index}")))
    }

    pub fn manifest(file_id: &str) -> Result<Self> {
        check_file_id(file_id)?;
        Ok(ObjectKey(format!("{file_id}.manifest")))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let key = ObjectKey(s.to_string());
        key.kind()?;
        Ok(key)
    }

    pub fn kind(&self) -> Result<KeyKind<'_>> {
        let bad = || StorageError::InvalidKey(self.0.clone());
        let mut parts = self.0.split('.');
        let file_id = parts.next().ok_or_else(bad)?;
        check_file_id(file_id).map_err(|_| bad())?;
        match (parts.next(), parts.next(), parts.next()) {
            (Some("manifest"), None, None) => Ok(KeyKind::Manifest { file_id }),
            (Some(c), Some(s), None) => {
                let chunk_tag = c.strip_prefix('c').and_then(parse_decimal).ok_or_else(bad)?;
                let share_index = s.strip_prefix('s').and_then(parse_decimal).ok_or_else(bad)?;
                Ok(KeyKind::Share {
                    file_id,
                    chunk_tag: u32::try_from(chunk_tag).map_err(|_| bad())?,
                    share_index: share_index as usize,
                })
            }
            _ => Err(bad()),
        }
    }

    pub fn file_id(&self) -> &str {
        self.0.split('.').next().unwrap_or_default()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ObjectKey {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

// Canonical decimal only, so each key has one spelling.
fn parse_decimal(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return None;
    }
    s.parse().ok()
}

fn check_file_id(id: &str) -> Result<()> {
    let ok =
        !id.is_empty() && id.len() <= 128 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_');
    if ok {
        Ok(())
    } else {
        Err(StorageError::InvalidKey(id.to_string()))
    }
}
