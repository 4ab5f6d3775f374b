//! On-disk layout. All integers little-endian.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "XSVAULT\0"
//!      8     2  format version (1)
//!     10     1  kdf id (1 = argon2id v19)
//!     11     4  memory cost, KiB
//!     15     4  time cost
//!     19     4  parallelism
//!     23    16  salt
//!     39    32  password verifier
//!     71    24  nonce
//!     95     4  ciphertext length L
//!     99     L  sealed entry table (XChaCha20-Poly1305, octets 0..99 as AAD)
//!   99+L    32  SHA-256 of octets 0..99+L
//! ```
//!
//! The trailing checksum catches any modification before the password is
//! even tried, so a damaged file reports an integrity error rather than a
//! wrong password. The AEAD tag covers deliberate forgeries that also fix
//! the checksum.

use std::collections::BTreeMap;

use argon2::{Algorithm, Argon2, Params, Version};
use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{XChaCha20Poly1305, XNonce};
use sha2::{Digest, Sha256};
use xorsplit_storage::StorageToken;
use zeroize::Zeroizing;

use crate::error::{Result, VaultError};
use crate::password::MasterPassword;

pub const MAGIC: &[u8; 8] = b"XSVAULT\0";
pub const FORMAT_VERSION: u16 = 1;
const KDF_ARGON2ID: u8 = 1;
pub const SALT_LEN: usize = 16;
const VERIFIER_LEN: usize = 32;
pub const NONCE_LEN: usize = 24;
const HEADER_LEN: usize = 99;
const CHECKSUM_LEN: usize = 32;

/// Argon2id cost parameters, stored in the vault header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KdfParams {
    pub memory_kib: u32,
    pub time_cost: u32,
    pub parallelism: u32,
}

impl Default for KdfParams {
    fn default() -> Self {
        KdfParams {
            memory_kib: 19 * 1024,
            time_cost: 2,
            parallelism: 1,
        }
    }
}

impl KdfParams {
    /// Cheap parameters for tests. Not for real vaults.
    pub fn insecure_fast() -> Self {
        KdfParams {
            memory_kib: 64,
            time_cost: 1,
            parallelism: 1,
        }
    }

    fn argon2(&self) -> Result<Argon2<'static>> {
        let params = Params::new(self.memory_kib, self.time_cost, self.parallelism, Some(64))
            .map_err(|e| VaultError::Kdf(e.to_string()))?;
        Ok(Argon2::new(Algorithm::Argon2id, Version::V0x13, params))
    }
}

/// Keys derived from the master password.
pub(crate) struct DerivedKeys {
    pub key: Zeroizing<[u8; 32]>,
    pub verifier: [u8; VERIFIER_LEN],
}

pub(crate) fn derive(pw: &MasterPassword, kdf: &KdfParams, salt: &[u8; SALT_LEN]) -> Result<DerivedKeys> {
    let mut out = Zeroizing::new([0u8; 64]);
    kdf.argon2()?
        .hash_password_into(pw.as_bytes(), salt, &mut out[..])
        .map_err(|e| VaultError::Kdf(e.to_string()))?;
    let mut key = Zeroizing::new([0u8; 32]);
    key.copy_from_slice(&out[..32]);
    let verifier = Sha256::new()
        .chain_update(b"xorsplit vault verifier")
        .chain_update(&out[32..])
        .finalize()
        .into();
    Ok(DerivedKeys { key, verifier })
}

pub(crate) fn verifier_matches(a: &[u8; VERIFIER_LEN], b: &[u8; VERIFIER_LEN]) -> bool {
    a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

/// Everything in the header except the nonce and ciphertext length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Header {
    pub kdf: KdfParams,
    pub salt: [u8; SALT_LEN],
    pub verifier: [u8; VERIFIER_LEN],
}

/// A parsed but still sealed vault file.
pub(crate) struct SealedFile<'a> {
    pub header: Header,
    aad: &'a [u8],
    nonce: [u8; NONCE_LEN],
    ciphertext: &'a [u8],
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

pub(crate) fn parse(bytes: &[u8]) -> Result<SealedFile<'_>> {
    let corrupt = |what: &str| VaultError::Integrity(what.to_string());
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(corrupt("file truncated"));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body)[..] != checksum[..] {
        return Err(corrupt("checksum mismatch"));
    }
    if &body[..8] != MAGIC {
        return Err(corrupt("not a vault file"));
    }
    let version = u16::from_le_bytes([body[8], body[9]]);
    if version != FORMAT_VERSION {
        return Err(VaultError::UnsupportedVersion(version));
    }
    if body[10] != KDF_ARGON2ID {
        return Err(corrupt("unknown key derivation function"));
    }
    let kdf = KdfParams {
        memory_kib: u32_at(body, 11),
        time_cost: u32_at(body, 15),
        parallelism: u32_at(body, 19),
    };
    let ct_len = u32_at(body, 95) as usize;
    if body.len() != HEADER_LEN + ct_len {
        return Err(corrupt("length field disagrees with file size"));
    }
    Ok(SealedFile {
        header: Header {
            kdf,
            salt: body[23..39].try_into().unwrap(),
            verifier: body[39..71].try_into().unwrap(),
        },
        aad: &body[..HEADER_LEN],
        nonce: body[71..95].try_into().unwrap(),
        ciphertext: &body[HEADER_LEN..],
    })
}

impl SealedFile<'_> {
    pub fn open(&self, key: &[u8; 32]) -> Result<BTreeMap<String, StorageToken>> {
        let cipher = XChaCha20Poly1305::new(key.into());
        let plain = Zeroizing::new(
            cipher
                .decrypt(
                    XNonce::from_slice(&self.nonce),
                    Payload {
                        msg: self.ciphertext,
                        aad: self.aad,
                    },
                )
                .map_err(|_| VaultError::Integrity("authentication tag mismatch".into()))?,
        );
        decode_table(&plain)
    }
}

pub(crate) fn seal(
    header: &Header,
    key: &[u8; 32],
    nonce: &[u8; NONCE_LEN],
    entries: &BTreeMap<String, StorageToken>,
) -> Result<Vec<u8>> {
    let plain = encode_table(entries)?;
    let ct_len = plain.len() + 16;
    let mut out = Vec::with_capacity(HEADER_LEN + ct_len + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(KDF_ARGON2ID);
    out.extend_from_slice(&header.kdf.memory_kib.to_le_bytes());
    out.extend_from_slice(&header.kdf.time_cost.to_le_bytes());
    out.extend_from_slice(&header.kdf.parallelism.to_le_bytes());
    out.extend_from_slice(&header.salt);
    out.extend_from_slice(&header.verifier);
    out.extend_from_slice(nonce);
    out.extend_from_slice(&(ct_len as u32).to_le_bytes());
    debug_assert_eq!(out.len(), HEADER_LEN);

    let cipher = XChaCha20Poly1305::new(key.into());
    let ct = cipher
        .encrypt(XNonce::from_slice(nonce), Payload { msg: &plain, aad: &out })
        .map_err(|_| VaultError::Integrity("encryption failed".into()))?;
    out.extend_from_slice(&ct);
    let checksum = Sha256::digest(&out);
    out.extend_from_slice(&checksum);
    Ok(out)
}

/// `u32 count`, then per entry `u16 len, name, u16 len, token`.
fn encode_table(entries: &BTreeMap<String, StorageToken>) -> Result<Zeroizing<Vec<u8>>> {
    let mut out = Zeroizing::new(Vec::new());
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (name, tok) in entries {
        for field in [name.as_bytes(), tok.expose().as_bytes()] {
            let len = u16::try_from(field.len())
                .map_err(|_| VaultError::InvalidInput(format!("entry {name:?} is too long")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(field);
        }
    }
    Ok(out)
}

fn decode_table(mut b: &[u8]) -> Result<BTreeMap<String, StorageToken>> {
    let bad = || VaultError::Integrity("malformed entry table".into());
    let mut take = |n: usize| -> Result<&[u8]> {
        if b.len() < n {
            return Err(bad());
        }
        let (head, rest) = b.split_at(n);
        b = rest;
        Ok(head)
    };
    let count = u32::from_le_bytes(take(4)?.try_into().unwrap());
    let mut entries = BTreeMap::new();
    for _ in 0..count {
        let len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(len)?).map_err(|_| bad())?.to_string();
        let len = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let tok = std::str::from_utf8(take(len)?).map_err(|_| bad())?;
        let tok = StorageToken::new(tok).map_err(|_| bad())?;
        entries.insert(name, tok);
    }
    if !b.is_empty() {
        return Err(bad());
    }
    Ok(entries)
}
