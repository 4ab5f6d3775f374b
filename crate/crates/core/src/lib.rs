//! XOR threshold secret sharing for files.
//!
//! Two sharing paths are provided:
//!
//! * [`block`]: the `(2,3)` scheme operating on `d`-bit blocks split into
//!   halves. This is what the file pipeline uses by default.
//! * [`kn`]: the general `(k, n)` scheme over `p - 1` pieces for a prime
//!   `p >= n`, reconstructed through a GF(2) matrix built by [`gf2`].
//!
//! On top of these, [`pipeline`] pads, chops and splits files, [`manifest`]
//! records what is needed to put them back together, and [`integrity`]
//! cross-checks reconstructions to detect and attribute tampered shares.
//!
//! ```
//! use xorsplit_core::block::{reconstruct23, share23, Block, BlockBits, SharingRandomness};
//!
//! let bits = BlockBits::new(16).unwrap();
//! let secret = Block::new(bits, vec![0xAB, 0xCD]).unwrap();
//! let rand = SharingRandomness::from_bytes(vec![0x12, 0x34]);
//! let [c1, _c2, c3] = share23(&secret, &rand).unwrap();
//! assert_eq!(reconstruct23(&c1, &c3).unwrap(), secret);
//! ```

pub mod block;
mod error;
pub mod gf2;
pub mod integrity;
pub mod kn;
pub mod manifest;
pub mod params;
pub mod pipeline;

pub use block::{reconstruct23, share23, Block, BlockBits, ShareBlock, SharingRandomness};
pub use error::{Error, Result};
pub use integrity::{verify_integrity, IntegrityReport, ShareVerdict, Verdict};
pub use kn::{build_recon_matrix, reconstruct_kn, share_kn, GeneralShare, PieceVector, RandomPadMatrix, ReconMatrix};
pub use manifest::{derive_file_id, ChunkEntry, Manifest, Placement};
pub use params::ThresholdParams;
pub use pipeline::{
    merge, pad, reconstruct_file, share_chunks_parallel, share_file, split, unpad, Chunk, ChunkPlan, ShareFile,
    SharedChunk, SharingScheme,
};

use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256.
pub fn digest_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/xor-sharing.md")]
    mod xor_sharing {}
    #[doc = include_str!("../../../book/src/general-scheme.md")]
    mod general_scheme {}
    #[doc = include_str!("../../../book/src/files.md")]
    mod files {}
    #[doc = include_str!("../../../book/src/integrity.md")]
    mod integrity {}
}
