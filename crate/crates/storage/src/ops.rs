//! Dispersal across the configured backends.

use std::collections::BTreeSet;
use std::sync::Arc;

use xorsplit_core::{Manifest, ShareFile, SharedChunk};

use crate::backend::{Backend, Receipt};
use crate::error::{Result, StorageError};
use crate::key::{KeyKind, ObjectKey};
use crate::token::StorageToken;

/// A backend together with the token for it and the share index it holds.
#[derive(Clone)]
pub struct BackendTarget {
    pub backend: Arc<dyn Backend>,
    pub token: StorageToken,
    pub share_index: usize,
}

impl BackendTarget {
    pub fn new(backend: Arc<dyn Backend>, token: StorageToken, share_index: usize) -> Self {
        BackendTarget {
            backend,
            token,
            share_index,
        }
    }

    pub fn name(&self) -> &str {
        self.backend.name()
    }
}

impl std::fmt::Debug for BackendTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendTarget")
            .field("backend", &self.name())
            .field("share_index", &self.share_index)
            .finish()
    }
}

/// Result of uploading to one backend.
#[derive(Debug, Clone)]
pub struct BackendOutcome {
    pub backend: String,
    pub share_index: usize,
    pub stored: Vec<(ObjectKey, Receipt)>,
    /// Objects not committed, in upload order.
    pub pending: Vec<ObjectKey>,
    pub error: Option<StorageError>,
}

impl BackendOutcome {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.pending.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct UploadReport {
    pub outcomes: Vec<BackendOutcome>,
}

impl UploadReport {
    /// True only when every backend committed everything.
    pub fn is_complete(&self) -> bool {
        self.outcomes.iter().all(BackendOutcome::is_ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BackendOutcome> {
        self.outcomes.iter().filter(|o| !o.is_ok())
    }
}

/// The objects one backend must hold: its share of every chunk, then the
/// manifest replica. The manifest goes last so a present manifest implies
/// the shares before it were committed.
pub fn objects_for<'a>(
    manifest: &Manifest,
    manifest_bytes: &'a [u8],
    chunks: &'a [SharedChunk],
    share_index: usize,
) -> Result<Vec<(ObjectKey, &'a [u8])>> {
    let mut out = Vec::with_capacity(chunks.len() + 1);
    for (tag, chunk) in chunks.iter().enumerate() {
        let share = chunk
            .shares
            .iter()
            .find(|s| s.share_index == share_index)
            .ok_or_else(|| StorageError::Other(format!("chunk {tag} has no share {share_index}")))?;
        out.push((
            ObjectKey::share(&manifest.file_id, tag as u32, share_index)?,
            &share.payload[..],
        ));
    }
    out.push((ObjectKey::manifest(&manifest.file_id)?, manifest_bytes));
    Ok(out)
}

/// Uploads `objects` to one backend, stopping at the first error.
pub fn upload_objects(target: &BackendTarget, objects: &[(ObjectKey, &[u8])]) -> BackendOutcome {
    let mut stored = Vec::new();
    let mut error = None;
    let mut pending = Vec::new();
    for (i, (key, data)) in objects.iter().enumerate() {
        match target.backend.put_object(key, data, &target.token) {
            Ok(r) => stored.push((key.clone(), r)),
            Err(e) => {
                error = Some(e);
                pending.extend(objects[i..].iter().map(|(k, _)| k.clone()));
                break;
            }
        }
    }
    BackendOutcome {
        backend: target.name().to_string(),
        share_index: target.share_index,
        stored,
        pending,
        error,
    }
}

/// Uploads each backend's share of every chunk plus a manifest replica, to
/// all backends in parallel.
pub fn upload_all(targets: &[BackendTarget], manifest: &Manifest, chunks: &[SharedChunk]) -> Result<UploadReport> {
    let manifest_bytes = manifest.to_canonical_json();
    let plans = targets
        .iter()
        .map(|t| objects_for(manifest, &manifest_bytes, chunks, t.share_index))
        .collect::<Result<Vec<_>>>()?;
    let outcomes = std::thread::scope(|scope| {
        let handles: Vec<_> = targets
            .iter()
            .zip(&plans)
            .map(|(t, objects)| scope.spawn(move || upload_objects(t, objects)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("upload worker panicked"))
            .collect()
    });
    Ok(UploadReport { outcomes })
}

/// Shares fetched from one backend, one per chunk, digest-checked.
#[derive(Debug, Clone)]
pub struct DownloadedShare {
    pub backend: String,
    pub share_index: usize,
    pub chunks: Vec<ShareFile>,
}

#[derive(Debug, Clone)]
pub struct Download {
    pub shares: Vec<DownloadedShare>,
    /// Backends tried and skipped, with the reason.
    pub failures: Vec<StorageError>,
}

fn share_index_for(manifest: &Manifest, target: &BackendTarget) -> usize {
    manifest
        .placement
        .iter()
        .find(|p| p.backend == target.name())
        .map(|p| p.share_index)
        .unwrap_or(target.share_index)
}

fn fetch_share(manifest: &Manifest, target: &BackendTarget, check_digests: bool) -> Result<DownloadedShare> {
    let idx = share_index_for(manifest, target);
    let mut chunks = Vec::with_capacity(manifest.chunks.len());
    for entry in &manifest.chunks {
        let key = ObjectKey::share(&manifest.file_id, entry.chunk_tag, idx)?;
        let payload = target.backend.get_object(&key, &target.token)?;
        if check_digests {
            let expected = entry.share_digests.get(idx).map(String::as_str);
            if expected != Some(xorsplit_core::digest_hex(&payload).as_str()) {
                return Err(StorageError::Integrity {
                    backend: target.name().to_string(),
                    key: key.to_string(),
                });
            }
        }
        chunks.push(ShareFile {
            share_index: idx,
            payload,
        });
    }
    Ok(DownloadedShare {
        backend: target.name().to_string(),
        share_index: idx,
        chunks,
    })
}

/// Fetches digest-valid shares from backends in the given preference order
/// until `k` are in hand.
pub fn download_any_k(manifest: &Manifest, targets: &[BackendTarget], k: usize) -> Result<Download> {
    let mut shares = Vec::with_capacity(k);
    let mut failures = Vec::new();
    for target in targets {
        if shares.len() == k {
            break;
        }
        match fetch_share(manifest, target, true) {
            Ok(s) => shares.push(s),
            Err(e) => {
                log::warn!("skipping backend {}: {e}", target.name());
                failures.push(e);
            }
        }
    }
    if shares.len() < k {
        return Err(StorageError::InsufficientShares {
            needed: k,
            available: shares.len(),
            causes: failures,
        });
    }
    Ok(Download { shares, failures })
}

/// Fetches whatever shares every backend returns, without digest checks.
pub fn fetch_all_shares(manifest: &Manifest, targets: &[BackendTarget]) -> Download {
    let mut shares = Vec::new();
    let mut failures = Vec::new();
    for target in targets {
        match fetch_share(manifest, target, false) {
            Ok(s) => shares.push(s),
            Err(e) => failures.push(e),
        }
    }
    Download { shares, failures }
}

#[derive(Debug, Clone)]
pub struct ManifestRead {
    pub manifest: Manifest,
    /// Backends whose replica could not be fetched.
    pub failures: Vec<StorageError>,
    /// Backends whose replica differed from the majority.
    pub dissenting: Vec<String>,
}

/// Reads every replica of `file_id`'s manifest and takes the majority.
pub fn read_manifest(file_id: &str, targets: &[BackendTarget]) -> Result<ManifestRead> {
    let key = ObjectKey::manifest(file_id)?;
    let mut copies = Vec::new();
    let mut failures = Vec::new();
    for t in targets {
        match t.backend.get_object(&key, &t.token) {
            Ok(bytes) => copies.push((t.name().to_string(), bytes)),
            Err(e) => failures.push(e),
        }
    }
    let manifest = Manifest::majority(copies.iter().map(|(_, b)| &b[..])).map_err(|e| {
        if copies.is_empty() {
            StorageError::InsufficientShares {
                needed: 1,
                available: 0,
                causes: failures.clone(),
            }
        } else {
            StorageError::Other(format!("manifest for {file_id}: {e}"))
        }
    })?;
    let canonical = manifest.to_canonical_json();
    let dissenting = copies
        .into_iter()
        .filter(|(_, b)| *b != canonical)
        .map(|(n, _)| n)
        .collect();
    Ok(ManifestRead {
        manifest,
        failures,
        dissenting,
    })
}

/// File ids with a manifest on at least one reachable backend, sorted.
pub fn list_file_ids(targets: &[BackendTarget]) -> (Vec<String>, Vec<StorageError>) {
    let mut ids = BTreeSet::new();
    let mut failures = Vec::new();
    for t in targets {
        match t.backend.list_objects("", &t.token) {
            Ok(keys) => {
                for k in keys {
                    if let Ok(key) = ObjectKey::parse(&k) {
                        if let Ok(KeyKind::Manifest { file_id }) = key.kind() {
                            ids.insert(file_id.to_string());
                        }
                    }
                }
            }
            Err(e) => failures.push(e),
        }
    }
    (ids.into_iter().collect(), failures)
}
