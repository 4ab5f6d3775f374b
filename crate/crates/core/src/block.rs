//! The (2,3) XOR threshold scheme on single blocks.
//!
//! A `d`-bit secret `SC` is split into halves `SC1` (high) and `SC2` (low) and
//! masked with a fresh `d`-bit random value `R = R1 ∥ R2`:
//!
//! ```text
//! c1 = R1         ∥ (SC2 ⊕ R2)
//! c2 = (SC1 ⊕ R1) ∥ R2
//! c3 = (SC2 ⊕ R1) ∥ (SC1 ⊕ R2)
//! ```
//!
//! Any two shares XOR to a value from which `SC` follows by at most one more
//! XOR of halves and a swap. Any single share is a one-time pad of secret
//! material and so is uniformly distributed.
//!
//! Octets are big-endian bit-significant: the high half of a block is its
//! first `d/16` octets. The one exception is `d = 8`, where the halves are the
//! high and low nibble of the single octet.

use rand::TryCryptoRng;

use crate::error::{invalid, Result};

/// A validated block size in bits.
///
/// `d` must be even and split into octet-aligned halves, so `d` is either a
/// positive multiple of 16 or exactly 8 (nibble halves, used for exhaustive
/// checks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockBits(u32);

impl BlockBits {
    /// Default block size for file sharing.
    pub const DEFAULT: BlockBits = BlockBits(2048);

    pub fn new(bits: u32) -> Result<Self> {
        if bits == 8 || (bits >= 16 && bits.is_multiple_of(16)) {
            Ok(BlockBits(bits))
        } else {
            Err(invalid(format!(
                "block size {bits} bits: must be 8 or a positive multiple of 16"
            )))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn octets(self) -> usize {
        self.0 as usize / 8
    }
}

impl Default for BlockBits {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl std::fmt::Display for BlockBits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// One secret block of exactly `d` bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    bits: BlockBits,
    data: Vec<u8>,
}

impl Block {
    pub fn new(bits: BlockBits, data: impl Into<Vec<u8>>) -> Result<Self> {
        let data = data.into();
        if data.len() != bits.octets() {
            return Err(invalid(format!(
                "block of {} octets does not hold {} bits",
                data.len(),
                bits
            )));
        }
        Ok(Block { bits, data })
    }

    pub fn block_bits(&self) -> BlockBits {
        self.bits
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }
}

/// Fresh masking randomness `R` for one block.
#[derive(Clone, PartialEq, Eq)]
pub struct SharingRandomness(Vec<u8>);

impl SharingRandomness {
    pub fn from_bytes(bytes: impl Into<Vec<u8>>) -> Self {
        SharingRandomness(bytes.into())
    }

    /// Draws `bits.octets()` octets from `rng`.
    pub fn generate<R: TryCryptoRng + ?Sized>(bits: BlockBits, rng: &mut R) -> Result<Self> {
        let mut buf = vec![0u8; bits.octets()];
        fill_random(rng, &mut buf)?;
        Ok(SharingRandomness(buf))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Debug for SharingRandomness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SharingRandomness({} octets)", self.0.len())
    }
}

/// One share of one block, tagged with its share index (0, 1 or 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareBlock {
    pub index: usize,
    pub data: Vec<u8>,
}

pub(crate) fn fill_random<R: TryCryptoRng + ?Sized>(rng: &mut R, buf: &mut [u8]) -> Result<()> {
    rng.try_fill_bytes(buf)
        .map_err(|e| crate::Error::Randomness(e.to_string()))
}

/// Splits `secret` into three shares using the masking value `rand`.
pub fn share23(secret: &Block, rand: &SharingRandomness) -> Result<[ShareBlock; 3]> {
    let bits = secret.bits;
    if rand.0.len() != secret.data.len() {
        return Err(invalid(format!(
            "randomness holds {} octets, secret holds {}",
            rand.0.len(),
            secret.data.len()
        )));
    }
    let len = secret.data.len();
    let mut out = [vec![0u8; len], vec![0u8; len], vec![0u8; len]];
    {
        let [a, b, c] = &mut out;
        share23_slices(bits, &secret.data, &rand.0, [a, b, c])?;
    }
    let [c1, c2, c3] = out;
    Ok([
        ShareBlock { index: 0, data: c1 },
        ShareBlock { index: 1, data: c2 },
        ShareBlock { index: 2, data: c3 },
    ])
}

/// Recovers the secret block from any two distinct shares.
pub fn reconstruct23(a: &ShareBlock, b: &ShareBlock) -> Result<Block> {
    let bits = BlockBits::new((a.data.len() * 8) as u32)?;
    let mut out = vec![0u8; a.data.len()];
    reconstruct23_slices(bits, (a.index, &a.data), (b.index, &b.data), &mut out)?;
    Block::new(bits, out)
}

/// Shares a run of consecutive blocks in one pass.
///
/// `secret` and `rand` must have equal length, a multiple of the block size;
/// each output slice must be the same length. Block `b` of output `i` is
/// share `i` of block `b` of `secret` masked with block `b` of `rand`.
pub fn share23_slices(bits: BlockBits, secret: &[u8], rand: &[u8], out: [&mut [u8]; 3]) -> Result<()> {
    let step = bits.octets();
    let [c1, c2, c3] = out;
    if rand.len() != secret.len() {
        return Err(invalid("randomness and secret lengths differ"));
    }
    if !secret.len().is_multiple_of(step) {
        return Err(invalid(format!(
            "{} octets is not a whole number of {}-bit blocks",
            secret.len(),
            bits
        )));
    }
    if [c1.len(), c2.len(), c3.len()].iter().any(|&l| l != secret.len()) {
        return Err(invalid("share buffers must match the secret length"));
    }

    if bits.bits() == 8 {
        for i in 0..secret.len() {
            let (s1, s2) = (secret[i] >> 4, secret[i] & 0x0f);
            let (r1, r2) = (rand[i] >> 4, rand[i] & 0x0f);
            c1[i] = (r1 << 4) | (s2 ^ r2);
            c2[i] = ((s1 ^ r1) << 4) | r2;
            c3[i] = ((s2 ^ r1) << 4) | (s1 ^ r2);
        }
        return Ok(());
    }

    let half = step / 2;
    let blocks = secret
        .chunks_exact(step)
        .zip(rand.chunks_exact(step))
        .zip(c1.chunks_exact_mut(step))
        .zip(c2.chunks_exact_mut(step))
        .zip(c3.chunks_exact_mut(step));
    for ((((s, r), o1), o2), o3) in blocks {
        let (s1, s2) = s.split_at(half);
        let (r1, r2) = r.split_at(half);
        let (o1h, o1l) = o1.split_at_mut(half);
        let (o2h, o2l) = o2.split_at_mut(half);
        let (o3h, o3l) = o3.split_at_mut(half);
        o1h.copy_from_slice(r1);
        xor_into(o1l, s2, r2);
        xor_into(o2h, s1, r1);
        o2l.copy_from_slice(r2);
        xor_into(o3h, s2, r1);
        xor_into(o3l, s1, r2);
    }
    Ok(())
}

/// Reconstructs a run of consecutive blocks from two share streams.
///
/// Each share is given with its index. The order of the two arguments does
/// not matter.
pub fn reconstruct23_slices(bits: BlockBits, a: (usize, &[u8]), b: (usize, &[u8]), out: &mut [u8]) -> Result<()> {
    let (lo, hi) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    if lo.0 == hi.0 {
        return Err(invalid(format!("share index {} given twice", lo.0)));
    }
    if hi.0 > 2 {
        return Err(invalid(format!("share index {} out of range for (2,3)", hi.0)));
    }
    if lo.1.len() != hi.1.len() || out.len() != lo.1.len() {
        return Err(invalid("share lengths differ"));
    }
    let step = bits.octets();
    if !out.len().is_multiple_of(step) {
        return Err(invalid(format!(
            "{} octets is not a whole number of {}-bit blocks",
            out.len(),
            bits
        )));
    }

    xor_into(out, lo.1, hi.1);
    let pair = (lo.0, hi.0);
    if pair == (0, 1) {
        return Ok(());
    }

    if bits.bits() == 8 {
        for v in out.iter_mut() {
            let (h, l) = (*v >> 4, *v & 0x0f);
            *v = match pair {
                // c1 ⊕ c3 = SC2 ∥ (SC1 ⊕ SC2)
                (0, 2) => ((h ^ l) << 4) | h,
                // c2 ⊕ c3 = (SC1 ⊕ SC2) ∥ SC1
                _ => (l << 4) | (h ^ l),
            };
        }
        return Ok(());
    }

    let half = step / 2;
    for block in out.chunks_exact_mut(step) {
        let (h, l) = block.split_at_mut(half);
        match pair {
            (0, 2) => {
                // h = SC2, l = SC1 ⊕ SC2 → l becomes SC1, then swap.
                xor_assign(l, h);
                h.swap_with_slice(l);
            }
            _ => {
                // h = SC1 ⊕ SC2, l = SC1 → h becomes SC2, then swap.
                xor_assign(h, l);
                h.swap_with_slice(l);
            }
        }
    }
    Ok(())
}

#[inline]
pub(crate) fn xor_into(dst: &mut [u8], a: &[u8], b: &[u8]) {
    for ((d, x), y) in dst.iter_mut().zip(a).zip(b) {
        *d = x ^ y;
    }
}

#[inline]
pub(crate) fn xor_assign(dst: &mut [u8], src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b8(v: u8) -> Block {
        Block::new(BlockBits::new(8).unwrap(), vec![v]).unwrap()
    }

    fn r8(v: u8) -> SharingRandomness {
        SharingRandomness::from_bytes(vec![v])
    }

    #[test]
    fn zero_randomness_exposes_layout() {
        let [c1, c2, c3] = share23(&b8(0xAB), &r8(0x00)).unwrap();
        assert_eq!(c1.data, vec![0x0B]);
        assert_eq!(c2.data, vec![0xA0]);
        assert_eq!(c3.data, vec![0xBA]);
    }

    #[test]
    fn hand_computed_shares() {
        // SC1=A SC2=B R1=3 R2=C
        let [c1, c2, c3] = share23(&b8(0xAB), &r8(0x3C)).unwrap();
        assert_eq!(c1.data, vec![0x37]);
        assert_eq!(c2.data, vec![0x9C]);
        assert_eq!(c3.data, vec![0x86]);
        assert_eq!(c1.data[0] ^ c2.data[0], 0xAB);
    }

    #[test]
    fn zero_secret_d16() {
        let bits = BlockBits::new(16).unwrap();
        let secret = Block::new(bits, vec![0, 0]).unwrap();
        let rand = SharingRandomness::from_bytes(vec![0x5A, 0xC3]);
        let [c1, c2, c3] = share23(&secret, &rand).unwrap();
        assert_eq!(c1.data, vec![0x5A, 0xC3]);
        assert_eq!(c2.data, vec![0x5A, 0xC3]);
        assert_eq!(c3.data, vec![0x5A, 0xC3]);
        for (a, b) in [(&c1, &c2), (&c1, &c3), (&c2, &c3)] {
            assert_eq!(reconstruct23(a, b).unwrap().as_bytes(), &[0, 0]);
        }
    }

    #[test]
    fn pair_rules_on_examples() {
        let s = |i, v| ShareBlock {
            index: i,
            data: vec![v],
        };
        assert_eq!(reconstruct23(&s(0, 0x37), &s(1, 0x9C)).unwrap().as_bytes(), &[0xAB]);
        assert_eq!(reconstruct23(&s(0, 0x37), &s(2, 0x86)).unwrap().as_bytes(), &[0xAB]);
        assert_eq!(reconstruct23(&s(1, 0xA0), &s(2, 0xBA)).unwrap().as_bytes(), &[0xAB]);
        // argument order is irrelevant
        assert_eq!(reconstruct23(&s(2, 0xBA), &s(1, 0xA0)).unwrap().as_bytes(), &[0xAB]);
    }

    #[test]
    fn exhaustive_roundtrip_d8() {
        for sc in 0..=255u8 {
            for r in 0..=255u8 {
                let shares = share23(&b8(sc), &r8(r)).unwrap();
                for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                    let got = reconstruct23(&shares[i], &shares[j]).unwrap();
                    assert_eq!(got.as_bytes(), &[sc], "sc={sc:#x} r={r:#x} pair=({i},{j})");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(BlockBits::new(24).is_err());
        assert!(BlockBits::new(0).is_err());
        assert!(BlockBits::new(7).is_err());
        assert!(BlockBits::new(4096).is_ok());
        let bits = BlockBits::new(16).unwrap();
        assert!(Block::new(bits, vec![0; 3]).is_err());
        let secret = Block::new(bits, vec![1, 2]).unwrap();
        assert!(share23(&secret, &SharingRandomness::from_bytes(vec![0; 3])).is_err());

        let a = ShareBlock {
            index: 1,
            data: vec![1, 2],
        };
        assert!(reconstruct23(&a, &a.clone()).is_err());
        let b = ShareBlock {
            index: 2,
            data: vec![1, 2, 3, 4],
        };
        assert!(reconstruct23(&a, &b).is_err());
        let c = ShareBlock {
            index: 3,
            data: vec![1, 2],
        };
        assert!(reconstruct23(&a, &c).is_err());
    }
}
