use std::fmt;

use rand::TryCryptoRng;
use zeroize::Zeroizing;

use crate::error::{Result, StorageError};

/// A bearer token for one backend. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct StorageToken(Zeroizing<String>);

impl StorageToken {
    pub const MIN_LEN: usize = 16;

    pub fn new(token: impl Into<String>) -> Result<Self> {
        let token = Zeroizing::new(token.into());
        if token.len() < Self::MIN_LEN {
            return Err(StorageError::Other(format!(
                "token shorter than {} octets",
                Self::MIN_LEN
            )));
        }
        if !token.bytes().all(|b| b.is_ascii_graphic()) {
            return Err(StorageError::Other("token must be printable ASCII".into()));
        }
        Ok(StorageToken(token))
    }

    /// 256 random bits, hex encoded.
    pub fn generate<R: TryCryptoRng + ?Sized>(rng: &mut R) -> Result<Self> {
        let mut raw = Zeroizing::new([0u8; 32]);
        rng.try_fill_bytes(&mut raw[..])
            .map_err(|e| StorageError::Other(format!("randomness source failed: {e}")))?;
        Ok(StorageToken(Zeroizing::new(hex::encode(&raw[..]))))
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for StorageToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("StorageToken(<redacted>)")
    }
}
