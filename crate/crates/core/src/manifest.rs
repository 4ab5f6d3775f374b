//! Per-file metadata needed to reassemble a shared file.
//!
//! Manifests are serialized as compact JSON. Keys appear in a fixed order:
//! `format_version` first, every other key sorted. Field declaration order
//! below is that order, so `serde_json` output is canonical.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::block::BlockBits;
use crate::error::{Error, Result};
use crate::params::ThresholdParams;
use crate::pipeline::{ChunkPlan, SharedChunk, SharingScheme};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub block_bits: u32,
    pub chunks: Vec<ChunkEntry>,
    pub file_id: String,
    pub original_len: u64,
    pub original_name: String,
    pub params: ThresholdParams,
    pub placement: Vec<Placement>,
    pub split_plan: ChunkPlan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChunkEntry {
    pub chunk_len: u64,
    pub chunk_tag: u32,
    /// Hex SHA-256 of each share file, by share index.
    pub share_digests: Vec<String>,
}

/// Which backend holds which share index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub backend: String,
    pub share_index: usize,
}

impl Manifest {
    pub fn new(
        file_id: impl Into<String>,
        original_name: impl Into<String>,
        scheme: &SharingScheme,
        plan: ChunkPlan,
        chunks: &[(u64, &SharedChunk)],
        placement: Vec<Placement>,
    ) -> Result<Self> {
        let chunks: Vec<ChunkEntry> = chunks
            .iter()
            .enumerate()
            .map(|(tag, (len, c))| ChunkEntry {
                chunk_len: *len,
                chunk_tag: tag as u32,
                share_digests: c.digests.clone(),
            })
            .collect();
        let m = Manifest {
            format_version: FORMAT_VERSION,
            block_bits: scheme.block_bits().bits(),
            original_len: chunks.iter().map(|c| c.chunk_len).sum(),
            chunks,
            file_id: file_id.into(),
            original_name: original_name.into(),
            params: *scheme.params(),
            placement,
            split_plan: plan,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn scheme(&self) -> Result<SharingScheme> {
        SharingScheme::from_parts(BlockBits::new(self.block_bits)?, self.params)
    }

    pub fn chunk(&self, tag: u32) -> Option<&ChunkEntry> {
        self.chunks.get(tag as usize).filter(|c| c.chunk_tag == tag)
    }

    /// Backend name holding `share_index`.
    pub fn backend_for(&self, share_index: usize) -> Option<&str> {
        self.placement
            .iter()
            .find(|p| p.share_index == share_index)
            .map(|p| p.backend.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Manifest(msg));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("unsupported format version {}", self.format_version));
        }
        self.scheme().map_err(|e| Error::Manifest(e.to_string()))?;
        self.split_plan.validate().map_err(|e| Error::Manifest(e.to_string()))?;
        if self.file_id.is_empty() {
            return bad("empty file id".into());
        }
        let total: u64 = self.chunks.iter().map(|c| c.chunk_len).sum();
        if total != self.original_len {
            return bad(format!(
                "chunk lengths sum to {total}, original length is {}",
                self.original_len
            ));
        }
        if self.chunks.is_empty() {
            return bad("no chunks".into());
        }
        for (i, c) in self.chunks.iter().enumerate() {
            if c.chunk_tag as usize != i {
                return bad(format!("chunk tags not contiguous at position {i}"));
            }
            if c.share_digests.len() != self.params.n {
                return bad(format!(
                    "chunk {} has {} digests, expected {}",
                    c.chunk_tag,
                    c.share_digests.len(),
                    self.params.n
                ));
            }
        }
        if !self.placement.is_empty() {
            let mut idx: Vec<usize> = self.placement.iter().map(|p| p.share_index).collect();
            idx.sort_unstable();
            if idx != (0..self.params.n).collect::<Vec<_>>() {
                return bad("placement is not a permutation of share indices".into());
            }
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("manifest serialization is infallible")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let m: Manifest = serde_json::from_slice(bytes).map_err(|e| Error::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// Picks the manifest most replicas agree on. Undecodable copies are
    /// ignored; a tie between distinct valid manifests is an integrity error.
    pub fn majority<'a>(copies: impl IntoIterator<Item = &'a [u8]>) -> Result<Self> {
        let mut votes: HashMap<Vec<u8>, (usize, Manifest)> = HashMap::new();
        for bytes in copies {
            if let Ok(m) = Manifest::from_json(bytes) {
                votes.entry(m.to_canonical_json()).or_insert((0, m)).0 += 1;
            }
        }
        let best = votes
            .values()
            .map(|(c, _)| *c)
            .max()
            .ok_or_else(|| Error::Integrity("no valid manifest replica".into()))?;
        let mut winners: Vec<_> = votes.into_values().filter(|(c, _)| *c == best).collect();
        if winners.len() > 1 {
            return Err(Error::Integrity(format!(
                "{} conflicting manifest replicas with {best} vote(s) each",
                winners.len()
            )));
        }
        Ok(winners.pop().unwrap().1)
    }
}

/// Stable handle for a stored file that reveals nothing about its content.
pub fn derive_file_id(original_name: &str, nonce: &[u8; 16]) -> String {
    let mut h = Sha256::new();
    h.update(original_name.as_bytes());
    h.update([0u8]);
    h.update(nonce);
    hex::encode(&h.finalize()[..16])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::share_file;
    use rand::rngs::ChaCha20Rng;
    use rand::SeedableRng;

    pub(crate) fn sample() -> Manifest {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let scheme = SharingScheme::two_of_three(BlockBits::new(256).unwrap()).unwrap();
        let a = share_file(&[1u8; 40], &scheme, &mut rng).unwrap();
        let b = share_file(&[2u8; 8], &scheme, &mut rng).unwrap();
        let placement = ["s1", "s2", "s3"]
            .iter()
            .enumerate()
            .map(|(i, b)| Placement {
                backend: b.to_string(),
                share_index: i,
            })
            .collect();
        Manifest::new(
            derive_file_id("notes.txt", &[7; 16]),
            "notes.txt",
            &scheme,
            ChunkPlan::new(40, 40).unwrap(),
            &[(40, &a), (8, &b)],
            placement,
        )
        .unwrap()
    }

    #[test]
    fn canonical_layout() {
        let json = String::from_utf8(sample().to_canonical_json()).unwrap();
        assert!(json.starts_with("{\"format_version\":1,\"block_bits\":256,\"chunks\":["));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys[1..].to_vec();
        sorted.sort();
        assert_eq!(keys[1..], sorted[..]);
        assert!(!json.contains(' '));
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let m = sample();
        let bytes = m.to_canonical_json();
        let back = Manifest::from_json(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_canonical_json(), bytes);
    }

    #[test]
    fn rejects_inconsistent_manifests() {
        let mut m = sample();
        m.original_len += 1;
        assert!(Manifest::from_json(&m.to_canonical_json()).is_err());
        let mut m = sample();
        m.chunks[1].chunk_tag = 5;
        assert!(m.validate().is_err());
        let mut m = sample();
        m.chunks[0].share_digests.pop();
        assert!(m.validate().is_err());
        let mut m = sample();
        m.placement[0].share_index = 1;
        assert!(m.validate().is_err());
        assert!(Manifest::from_json(b"{\"format_version\":1}").is_err());
    }

    #[test]
    fn majority_vote() {
        let good = sample().to_canonical_json();
        let mut other = sample();
        other.original_name = "evil".into();
        let other = other.to_canonical_json();
        let garbage = b"\x00\x01garbage".to_vec();

        let m = Manifest::majority([&good[..], &garbage[..], &good[..]]).unwrap();
        assert_eq!(m, sample());
        let m = Manifest::majority([&good[..], &other[..], &good[..]]).unwrap();
        assert_eq!(m.original_name, "notes.txt");
        assert!(Manifest::majority([&good[..], &other[..]]).is_err());
        assert!(Manifest::majority([&garbage[..]]).is_err());
        let m = Manifest::majority([&garbage[..], &good[..]]).unwrap();
        assert_eq!(m, sample());
    }

    #[test]
    fn file_ids_differ_by_nonce() {
        let a = derive_file_id("x", &[0; 16]);
        let b = derive_file_id("x", &[1; 16]);
        assert_ne!(a, b);
        assert_eq!(a.len(), 32);
        assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
    }
}
