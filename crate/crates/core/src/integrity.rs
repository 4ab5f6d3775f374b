//! Tamper detection and attribution for one shared chunk.
//!
//! XOR sharing is linear, so any change to a share changes every
//! reconstruction that uses it. Verification reconstructs from every
//! `k`-subset of the available shares, picks a reference output (from
//! subsets whose shares all match their manifest digests, then by
//! plurality), and blames a share when every subset containing it disagrees
//! with the reference.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kn::ReconCache;
use crate::manifest::Manifest;
use crate::pipeline::{reconstruct_with_cache, ShareFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Ok,
    /// The share does not match the manifest digest, but reconstructions
    /// using it agree with the others (for instance a stale manifest).
    DigestMismatch,
    /// Every reconstruction that uses this share deviates.
    CrossPairMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShareVerdict {
    pub share_index: usize,
    pub digest_ok: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegrityReport {
    pub chunk_tag: u32,
    pub shares: Vec<ShareVerdict>,
    pub missing: Vec<usize>,
    /// True when every subset reconstructs the same octets.
    pub consistent: bool,
    /// The single share blamed for a deviation, if one can be named.
    pub deviating: Option<usize>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.consistent && self.shares.iter().all(|s| s.verdict == Verdict::Ok)
    }

    pub fn verdict(&self, share_index: usize) -> Option<Verdict> {
        self.shares
            .iter()
            .find(|s| s.share_index == share_index)
            .map(|s| s.verdict)
    }
}

/// Verifies the available shares of chunk `chunk_tag` against `manifest`.
pub fn verify_integrity(shares: &[ShareFile], manifest: &Manifest, chunk_tag: u32) -> Result<IntegrityReport> {
    let scheme = manifest.scheme()?;
    let entry = manifest
        .chunk(chunk_tag)
        .ok_or_else(|| Error::Integrity(format!("manifest has no chunk tag {chunk_tag}")))?;
    let n = scheme.n();
    let k = scheme.k();

    let mut by_index: Vec<Option<&ShareFile>> = vec![None; n];
    for s in shares {
        if s.share_index >= n {
            return Err(Error::InvalidInput(format!(
                "share index {} out of range",
                s.share_index
            )));
        }
        if by_index[s.share_index].replace(s).is_some() {
            return Err(Error::InvalidInput(format!(
                "share index {} given twice",
                s.share_index
            )));
        }
    }
    let present: Vec<&ShareFile> = by_index.iter().flatten().copied().collect();
    let missing: Vec<usize> = (0..n).filter(|&i| by_index[i].is_none()).collect();
    if present.len() < k {
        return Err(Error::Unavailable { missing });
    }

    let digest_ok: HashMap<usize, bool> = present
        .iter()
        .map(|s| (s.share_index, s.digest() == entry.share_digests[s.share_index]))
        .collect();

    let cache = ReconCache::new();
    let chunk_len = entry.chunk_len as usize;
    let mut outputs: Vec<(Vec<usize>, Option<String>)> = Vec::new();
    for subset in k_subsets(present.len(), k) {
        let chosen: Vec<&ShareFile> = subset.iter().map(|&i| present[i]).collect();
        let indices = chosen.iter().map(|s| s.share_index).collect();
        // A malformed share (wrong length) fails to reconstruct at all.
        let out = reconstruct_with_cache(&chosen, &scheme, chunk_len, &cache)
            .ok()
            .map(|v| crate::digest_hex(&v));
        outputs.push((indices, out));
    }

    let consistent = outputs.iter().all(|(_, o)| o.is_some() && *o == outputs[0].1);
    let trusted = outputs
        .iter()
        .filter(|(idx, _)| idx.iter().all(|i| digest_ok[i]))
        .filter_map(|(_, o)| o.as_ref());
    let reference = plurality(trusted, 1).or_else(|| plurality(outputs.iter().filter_map(|(_, o)| o.as_ref()), 2));

    let verdicts: Vec<ShareVerdict> = present
        .iter()
        .map(|s| {
            let i = s.share_index;
            let blamed = reference.as_ref().is_some_and(|r| {
                outputs
                    .iter()
                    .filter(|(idx, _)| idx.contains(&i))
                    .all(|(_, o)| o.as_ref() != Some(r))
            });
            let verdict = if blamed {
                Verdict::CrossPairMismatch
            } else if !digest_ok[&i] {
                Verdict::DigestMismatch
            } else {
                Verdict::Ok
            };
            ShareVerdict {
                share_index: i,
                digest_ok: digest_ok[&i],
                verdict,
            }
        })
        .collect();

    let flagged: Vec<usize> = verdicts
        .iter()
        .filter(|v| v.verdict != Verdict::Ok)
        .map(|v| v.share_index)
        .collect();
    let deviating = match flagged[..] {
        [one] => Some(one),
        _ => None,
    };

    Ok(IntegrityReport {
        chunk_tag,
        shares: verdicts,
        missing,
        consistent,
        deviating,
    })
}

/// Most frequent value, if it is unique and seen at least `min` times.
fn plurality<'a>(values: impl Iterator<Item = &'a String>, min: usize) -> Option<String> {
    let mut counts: HashMap<&String, usize> = HashMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let best = *counts.values().max()?;
    if best < min {
        return None;
    }
    let mut top = counts.into_iter().filter(|(_, c)| *c == best);
    let (value, _) = top.next()?;
    if top.next().is_some() {
        return None;
    }
    Some(value.clone())
}

pub(crate) fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}
