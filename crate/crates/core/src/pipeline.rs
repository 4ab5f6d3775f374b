//! File-level sharing: padding, block chopping, splitting into chunks and
//! reassembly.

use rand::TryCryptoRng;
use serde::{Deserialize, Serialize};

use crate::block::{fill_random, reconstruct23_slices, share23_slices, BlockBits};
use crate::error::{invalid, Error, Result};
use crate::kn::{reconstruct_kn_with, share_kn, GeneralShare, PieceVector, RandomPadMatrix, ReconCache};
use crate::params::{smallest_prime_at_least, ThresholdParams};

pub const MIB: usize = 1 << 20;

/// When and how a file is cut into independently shared chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub chunk_size: usize,
    pub split_threshold: usize,
}

impl ChunkPlan {
    pub fn new(split_threshold: usize, chunk_size: usize) -> Result<Self> {
        let plan = ChunkPlan {
            chunk_size,
            split_threshold,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_size == 0 || self.split_threshold == 0 {
            return Err(invalid("chunk size and split threshold must be positive"));
        }
        if self.chunk_size > self.split_threshold {
            return Err(invalid(format!(
                "chunk size {} exceeds split threshold {}",
                self.chunk_size, self.split_threshold
            )));
        }
        Ok(())
    }
}

impl Default for ChunkPlan {
    fn default() -> Self {
        ChunkPlan {
            chunk_size: MIB,
            split_threshold: MIB,
        }
    }
}

/// How blocks are shared: the `(2,3)` block scheme, or the general scheme
/// with pieces sized so that one block fills the `p - 1` pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharingScheme {
    block_bits: BlockBits,
    params: ThresholdParams,
}

impl SharingScheme {
    pub fn new(k: usize, n: usize, block_bits: BlockBits) -> Result<Self> {
        if block_bits.bits() < 16 {
            return Err(invalid("file sharing needs blocks of at least 16 bits"));
        }
        let prime = smallest_prime_at_least(n.max(2));
        let piece_octets = block_bits.octets().div_ceil(prime - 1);
        let params = ThresholdParams::with_prime(k, n, prime, (piece_octets * 8) as u32)?;
        Ok(SharingScheme { block_bits, params })
    }

    pub fn two_of_three(block_bits: BlockBits) -> Result<Self> {
        Self::new(2, 3, block_bits)
    }

    /// Rebuilds the scheme recorded in a manifest.
    pub fn from_parts(block_bits: BlockBits, params: ThresholdParams) -> Result<Self> {
        let expected = Self::new(params.k, params.n, block_bits)?;
        if expected.params != params {
            return Err(invalid(format!(
                "parameters {params:?} do not match block size {block_bits}"
            )));
        }
        Ok(expected)
    }

    pub fn block_bits(&self) -> BlockBits {
        self.block_bits
    }

    pub fn params(&self) -> &ThresholdParams {
        &self.params
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// Octets consumed by one sharing step; also the padding unit. For the
    /// general scheme this is the block size rounded up to whole pieces.
    pub fn unit_octets(&self) -> usize {
        self.params.secret_octets()
    }

    pub fn padded_len(&self, len: usize) -> usize {
        len.div_ceil(self.unit_octets()) * self.unit_octets()
    }
}

/// One share of one chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareFile {
    pub share_index: usize,
    pub payload: Vec<u8>,
}

impl ShareFile {
    pub fn digest(&self) -> String {
        crate::digest_hex(&self.payload)
    }
}

/// The `n` shares of one chunk with their digests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedChunk {
    pub shares: Vec<ShareFile>,
    pub digests: Vec<String>,
}

/// Zero-pads `data` up to a whole number of `unit`-octet blocks.
pub fn pad(data: &[u8], unit: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len().div_ceil(unit) * unit);
    out.extend_from_slice(data);
    out.resize(data.len().div_ceil(unit) * unit, 0);
    out
}

/// Drops padding from a reconstructed chunk.
pub fn unpad(mut data: Vec<u8>, original_len: usize) -> Result<Vec<u8>> {
    if original_len > data.len() {
        return Err(invalid(format!(
            "cannot truncate {} octets to {original_len}",
            data.len()
        )));
    }
    data.truncate(original_len);
    Ok(data)
}

/// Shares one chunk. Each block gets fresh randomness from `rng`; if the
/// source fails nothing is returned.
pub fn share_file<R: TryCryptoRng + ?Sized>(data: &[u8], scheme: &SharingScheme, rng: &mut R) -> Result<SharedChunk> {
    let padded = pad(data, scheme.unit_octets());
    let shares = if scheme.params.is_two_of_three() {
        let mut rand = vec![0u8; padded.len()];
        fill_random(rng, &mut rand)?;
        let mut out = [
            vec![0u8; padded.len()],
            vec![0u8; padded.len()],
            vec![0u8; padded.len()],
        ];
        {
            let [a, b, c] = &mut out;
            share23_slices(scheme.block_bits, &padded, &rand, [a, b, c])?;
        }
        out.into_iter()
            .enumerate()
            .map(|(i, payload)| ShareFile {
                share_index: i,
                payload,
            })
            .collect::<Vec<_>>()
    } else {
        share_general(&padded, &scheme.params, rng)?
    };
    let digests = shares.iter().map(ShareFile::digest).collect();
    Ok(SharedChunk { shares, digests })
}

fn share_general<R: TryCryptoRng + ?Sized>(
    padded: &[u8],
    params: &ThresholdParams,
    rng: &mut R,
) -> Result<Vec<ShareFile>> {
    let unit = params.secret_octets();
    let mut out: Vec<ShareFile> = (0..params.n)
        .map(|i| ShareFile {
            share_index: i,
            payload: Vec::with_capacity(padded.len()),
        })
        .collect();
    for block in padded.chunks_exact(unit) {
        let pads = RandomPadMatrix::generate(params, rng)?;
        let secret = PieceVector::from_bytes(params, block.to_vec())?;
        for s in share_kn(&secret, params, &pads)? {
            out[s.index].payload.extend_from_slice(s.as_bytes());
        }
    }
    Ok(out)
}

/// Reconstructs one chunk from at least `k` shares with distinct indices and
/// strips padding down to `original_len`.
pub fn reconstruct_file(shares: &[&ShareFile], scheme: &SharingScheme, original_len: usize) -> Result<Vec<u8>> {
    reconstruct_with_cache(shares, scheme, original_len, &ReconCache::new())
}

pub(crate) fn reconstruct_with_cache(
    shares: &[&ShareFile],
    scheme: &SharingScheme,
    original_len: usize,
    cache: &ReconCache,
) -> Result<Vec<u8>> {
    let k = scheme.k();
    if shares.len() < k {
        return Err(Error::InsufficientShares {
            needed: k,
            got: shares.len(),
        });
    }
    let chosen = &shares[..k];
    let mut idx: Vec<usize> = chosen.iter().map(|s| s.share_index).collect();
    idx.sort_unstable();
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid(format!("share index collision in {idx:?}")));
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= scheme.n()) {
        return Err(invalid(format!("share index {bad} out of range 0..{}", scheme.n())));
    }
    let len = chosen[0].payload.len();
    if chosen.iter().any(|s| s.payload.len() != len) {
        return Err(invalid("share lengths differ"));
    }
    let unit = scheme.unit_octets();
    if !len.is_multiple_of(unit) {
        return Err(invalid(format!("share length {len} is not block aligned")));
    }
    if original_len > len {
        return Err(invalid(format!(
            "chunk length {original_len} exceeds reconstructed length {len}"
        )));
    }

    let mut out = vec![0u8; len];
    if scheme.params.is_two_of_three() {
        reconstruct23_slices(
            scheme.block_bits,
            (chosen[0].share_index, &chosen[0].payload),
            (chosen[1].share_index, &chosen[1].payload),
            &mut out,
        )?;
    } else {
        let params = &scheme.params;
        let matrix = cache.get(&idx, params)?;
        for (b, dst) in out.chunks_exact_mut(unit).enumerate() {
            let range = b * unit..(b + 1) * unit;
            let block_shares = chosen
                .iter()
                .map(|s| GeneralShare::from_bytes(params, s.share_index, s.payload[range.clone()].to_vec()))
                .collect::<Result<Vec<_>>>()?;
            dst.copy_from_slice(reconstruct_kn_with(&matrix, &block_shares)?.as_bytes());
        }
    }
    unpad(out, original_len)
}

/// Shares several chunks on up to `threads` worker threads. Each worker
/// draws from its own generator built by `make_rng`. Output order matches
/// `chunks`.
pub fn share_chunks_parallel<R, F>(
    chunks: &[&[u8]],
    scheme: &SharingScheme,
    threads: usize,
    make_rng: F,
) -> Result<Vec<SharedChunk>>
where
    R: TryCryptoRng,
    F: Fn() -> R + Sync,
{
    let threads = threads.clamp(1, chunks.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Vec<(usize, Result<SharedChunk>)>> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut rng = make_rng();
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= chunks.len() {
                            break done;
                        }
                        done.push((i, share_file(chunks[i], scheme, &mut rng)));
                    }
                })
            })
            .collect();
        workers
            .into_iter()
            .map(|w| w.join().expect("sharing worker panicked"))
            .collect()
    });
    let mut out: Vec<Option<SharedChunk>> = (0..chunks.len()).map(|_| None).collect();
    for (i, r) in results.into_iter().flatten() {
        out[i] = Some(r?);
    }
    Ok(out.into_iter().map(|c| c.expect("every chunk handled")).collect())
}

/// A tagged slice of a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Chunk<'a> {
    pub tag: u32,
    pub data: &'a [u8],
}

/// Cuts `data` into `chunk_size` pieces when it is larger than the split
/// threshold; otherwise returns it whole under tag 0.
pub fn split<'a>(data: &'a [u8], plan: &ChunkPlan) -> Vec<Chunk<'a>> {
    if data.len() <= plan.split_threshold {
        return vec![Chunk { tag: 0, data }];
    }
    data.chunks(plan.chunk_size)
        .enumerate()
        .map(|(i, data)| Chunk { tag: i as u32, data })
        .collect()
}

/// Concatenates chunks in tag order. Tags must be exactly `0..t`.
pub fn merge(mut chunks: Vec<(u32, Vec<u8>)>) -> Result<Vec<u8>> {
    chunks.sort_by_key(|(tag, _)| *tag);
    for (expected, (tag, _)) in chunks.iter().enumerate() {
        let expected = expected as u32;
        if *tag != expected {
            return Err(if *tag < expected {
                Error::Integrity(format!("duplicate chunk tag {tag}"))
            } else {
                Error::Integrity(format!("missing chunk tag {expected}"))
            });
        }
    }
    let total = chunks.iter().map(|(_, c)| c.len()).sum();
    let mut out = Vec::with_capacity(total);
    for (_, c) in chunks {
        out.extend_from_slice(&c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::ChaCha20Rng;
    use rand::{RngExt, SeedableRng};

    fn scheme23(bits: u32) -> SharingScheme {
        SharingScheme::two_of_three(BlockBits::new(bits).unwrap()).unwrap()
    }

    #[test]
    fn pad_examples() {
        let p = pad(&[1, 2, 3, 4, 5], 4);
        assert_eq!(p, vec![1, 2, 3, 4, 5, 0, 0, 0]);
        assert!(pad(&[], 256).is_empty());
        let aligned = vec![7u8; 256];
        assert_eq!(pad(&aligned, 256), aligned);
    }

    #[test]
    fn unpad_rejects_overlong_target() {
        assert!(unpad(vec![0; 4], 5).is_err());
        assert_eq!(unpad(vec![1, 2, 0, 0], 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn zero_block_zero_randomness() {
        struct Zero;
        impl rand::TryRng for Zero {
            type Error = std::convert::Infallible;
            fn try_next_u32(&mut self) -> Result<u32, Self::Error> {
                Ok(0)
            }
            fn try_next_u64(&mut self) -> Result<u64, Self::Error> {
                Ok(0)
            }
            fn try_fill_bytes(&mut self, dst: &mut [u8]) -> Result<(), Self::Error> {
                dst.fill(0);
                Ok(())
            }
        }
        impl rand::TryCryptoRng for Zero {}
        let out = share_file(&[0, 0], &scheme23(16), &mut Zero).unwrap();
        assert!(out.shares.iter().all(|s| s.payload == vec![0, 0]));
    }

    #[test]
    fn failing_randomness_aborts() {
        #[derive(Debug)]
        struct Broken;
        impl std::fmt::Display for Broken {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("entropy exhausted")
            }
        }
        impl std::error::Error for Broken {}
        struct Failing;
        impl rand::TryRng for Failing {
            type Error = Broken;
            fn try_next_u32(&mut self) -> Result<u32, Broken> {
                Err(Broken)
            }
            fn try_next_u64(&mut self) -> Result<u64, Broken> {
                Err(Broken)
            }
            fn try_fill_bytes(&mut self, _: &mut [u8]) -> Result<(), Broken> {
                Err(Broken)
            }
        }
        impl rand::TryCryptoRng for Failing {}
        let err = share_file(&[1; 100], &scheme23(256), &mut Failing).unwrap_err();
        assert!(matches!(err, Error::Randomness(_)));
        let general = SharingScheme::new(3, 5, BlockBits::new(256).unwrap()).unwrap();
        assert!(matches!(
            share_file(&[1; 100], &general, &mut Failing),
            Err(Error::Randomness(_))
        ));
    }

    #[test]
    fn two_block_roundtrip_all_pairs() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let scheme = scheme23(32);
        let data = [9u8, 8, 7, 6, 5, 4, 3];
        let shared = share_file(&data, &scheme, &mut rng).unwrap();
        assert!(shared.shares.iter().all(|s| s.payload.len() == 8));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let got = reconstruct_file(&[&shared.shares[i], &shared.shares[j]], &scheme, data.len()).unwrap();
            assert_eq!(got, data);
        }
    }

    #[test]
    fn one_mib_random_file() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut data = vec![0u8; MIB];
        rng.fill(&mut data[..]);
        let scheme = scheme23(2048);
        let s = share_file(&data, &scheme, &mut rng).unwrap();
        assert_eq!(
            reconstruct_file(&[&s.shares[0], &s.shares[2]], &scheme, MIB).unwrap(),
            data
        );
        assert_eq!(
            reconstruct_file(&[&s.shares[1], &s.shares[2]], &scheme, MIB).unwrap(),
            data
        );
    }

    #[test]
    fn empty_file() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let scheme = scheme23(2048);
        let s = share_file(&[], &scheme, &mut rng).unwrap();
        assert!(s.shares.iter().all(|s| s.payload.is_empty()));
        assert!(reconstruct_file(&[&s.shares[0], &s.shares[1]], &scheme, 0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn bit_flip_changes_only_its_half_block() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let scheme = scheme23(256);
        let mut data = vec![0u8; 32 * 4];
        rng.fill(&mut data[..]);
        let s = share_file(&data, &scheme, &mut rng).unwrap();
        // block 2, low half, bit 3 of share c2
        let offset = 2 * 32 + 20;
        let mut tampered = s.shares[1].clone();
        tampered.payload[offset] ^= 0x08;
        let out = reconstruct_file(&[&s.shares[0], &tampered], &scheme, data.len()).unwrap();
        let diff: Vec<usize> = (0..data.len()).filter(|&i| out[i] != data[i]).collect();
        assert_eq!(diff, vec![offset]);

        // with c3, the same flip spreads over both halves of that block only
        let out = reconstruct_file(&[&tampered, &s.shares[2]], &scheme, data.len()).unwrap();
        let diff: Vec<usize> = (0..data.len()).filter(|&i| out[i] != data[i]).collect();
        assert!(!diff.is_empty());
        assert!(diff.iter().all(|&i| (64..96).contains(&i)));
    }

    #[test]
    fn reconstruct_errors() {
        let scheme = scheme23(16);
        let a = ShareFile {
            share_index: 0,
            payload: vec![0; 4],
        };
        let b = ShareFile {
            share_index: 0,
            payload: vec![0; 4],
        };
        let c = ShareFile {
            share_index: 1,
            payload: vec![0; 6],
        };
        let d = ShareFile {
            share_index: 1,
            payload: vec![0; 4],
        };
        assert!(reconstruct_file(&[&a, &b], &scheme, 4).is_err());
        assert!(reconstruct_file(&[&a, &c], &scheme, 4).is_err());
        assert!(reconstruct_file(&[&a, &d], &scheme, 5).is_err());
        assert!(matches!(
            reconstruct_file(&[&a], &scheme, 4),
            Err(Error::InsufficientShares { .. })
        ));
    }

    #[test]
    fn general_scheme_file_roundtrip() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let scheme = SharingScheme::new(3, 5, BlockBits::new(2048).unwrap()).unwrap();
        assert_eq!(scheme.params().prime, 5);
        assert_eq!(scheme.unit_octets(), 256);
        let mut data = vec![0u8; 5000];
        rng.fill(&mut data[..]);
        let s = share_file(&data, &scheme, &mut rng).unwrap();
        assert_eq!(s.shares.len(), 5);
        for sh in &s.shares {
            assert_eq!(sh.payload.len(), scheme.padded_len(data.len()));
        }
        let got = reconstruct_file(&[&s.shares[4], &s.shares[1], &s.shares[2]], &scheme, data.len()).unwrap();
        assert_eq!(got, data);

        // block size rounded up to whole pieces: 2048/8 = 256 octets over 6 pieces
        let odd = SharingScheme::new(2, 7, BlockBits::new(2048).unwrap()).unwrap();
        assert_eq!(odd.unit_octets(), 258);
    }

    #[test]
    fn split_examples() {
        let plan = ChunkPlan::new(1000, 1000).unwrap();
        let small = vec![1u8; 100];
        assert_eq!(split(&small, &plan).len(), 1);
        let big = vec![2u8; 2500];
        let chunks = split(&big, &plan);
        let lens: Vec<_> = chunks.iter().map(|c| c.data.len()).collect();
        let tags: Vec<_> = chunks.iter().map(|c| c.tag).collect();
        assert_eq!(lens, vec![1000, 1000, 500]);
        assert_eq!(tags, vec![0, 1, 2]);
        assert!(ChunkPlan::new(10, 20).is_err());
        assert!(ChunkPlan::new(0, 0).is_err());
    }

    #[test]
    fn merge_errors_name_the_tag() {
        let err = merge(vec![(0, vec![1]), (2, vec![3])]).unwrap_err();
        assert_eq!(err, Error::Integrity("missing chunk tag 1".into()));
        let err = merge(vec![(0, vec![1]), (1, vec![2]), (1, vec![3])]).unwrap_err();
        assert_eq!(err, Error::Integrity("duplicate chunk tag 1".into()));
        assert_eq!(merge(vec![(1, vec![2]), (0, vec![1])]).unwrap(), vec![1, 2]);
    }

    #[test]
    fn parallel_sharing_matches_chunk_order() {
        let scheme = SharingScheme::two_of_three(BlockBits::new(256).unwrap()).unwrap();
        let data: Vec<u8> = (0..10_000u32).map(|i| (i % 253) as u8).collect();
        let chunks: Vec<&[u8]> = data.chunks(1000).collect();
        let seed = std::sync::atomic::AtomicU64::new(0);
        let shared = share_chunks_parallel(&chunks, &scheme, 4, || {
            ChaCha20Rng::seed_from_u64(seed.fetch_add(1, std::sync::atomic::Ordering::Relaxed))
        })
        .unwrap();
        assert_eq!(shared.len(), chunks.len());
        for (c, s) in chunks.iter().zip(&shared) {
            let refs: Vec<&ShareFile> = s.shares[1..].iter().collect();
            assert_eq!(&reconstruct_file(&refs, &scheme, c.len()).unwrap(), c);
        }
        assert!(share_chunks_parallel(&[], &scheme, 4, || ChaCha20Rng::seed_from_u64(0))
            .unwrap()
            .is_empty());
    }
}
