//! Splitting one token across several token stores so that no `k − 1` of
//! them learn anything about it.
//!
//! The token, prefixed with its length as a big-endian `u16`, is padded to
//! whole sharing units and shared with the XOR threshold scheme. Each shard
//! is stored as an ordinary token string `xs1-<k>-<n>-<index>-<hex>`.

use rand::TryCryptoRng;
use xorsplit_core::{reconstruct_file, share_file, BlockBits, ShareFile, SharingScheme};
use xorsplit_storage::StorageToken;
use zeroize::Zeroizing;

use crate::error::{Result, VaultError};
use crate::store::TokenStore;

const PREFIX: &str = "xs1";
const BLOCK_BITS: u32 = 128;

/// One share of a token.
#[derive(Clone, PartialEq, Eq)]
pub struct TokenShard {
    pub k: usize,
    pub n: usize,
    pub index: usize,
    pub payload: Vec<u8>,
}

impl std::fmt::Debug for TokenShard {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TokenShard")
            .field("k", &self.k)
            .field("n", &self.n)
            .field("index", &self.index)
            .field("octets", &self.payload.len())
            .finish()
    }
}

impl TokenShard {
    pub fn encode(&self) -> StorageToken {
        let s = format!(
            "{PREFIX}-{}-{}-{}-{}",
            self.k,
            self.n,
            self.index,
            hex::encode(&self.payload)
        );
        StorageToken::new(s).expect("encoded shard is printable and long enough")
    }

    pub fn decode(tok: &StorageToken) -> Result<Self> {
        let bad = || VaultError::InvalidInput("stored value is not a token shard".into());
        let mut parts = tok.expose().split('-');
        if parts.next() != Some(PREFIX) {
            return Err(bad());
        }
        let mut num = || -> Result<usize> { parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad) };
        let (k, n, index) = (num()?, num()?, num()?);
        let payload = parts.next().and_then(|p| hex::decode(p).ok()).ok_or_else(bad)?;
        if parts.next().is_some() || index >= n {
            return Err(bad());
        }
        Ok(TokenShard { k, n, index, payload })
    }
}

fn scheme(k: usize, n: usize) -> Result<SharingScheme> {
    SharingScheme::new(k, n, BlockBits::new(BLOCK_BITS).expect("valid block size"))
        .map_err(|e| VaultError::InvalidInput(e.to_string()))
}

/// Splits `tok` into `n` shards, any `k` of which recover it.
pub fn shard_token<R: TryCryptoRng + ?Sized>(
    tok: &StorageToken,
    k: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<TokenShard>> {
    let scheme = scheme(k, n)?;
    let raw = tok.expose().as_bytes();
    let len = u16::try_from(raw.len()).map_err(|_| VaultError::InvalidInput("token too long".into()))?;
    let mut secret = Zeroizing::new(Vec::with_capacity(scheme.padded_len(raw.len() + 2)));
    secret.extend_from_slice(&len.to_be_bytes());
    secret.extend_from_slice(raw);
    let shared = share_file(&secret, &scheme, rng).map_err(|e| VaultError::Randomness(e.to_string()))?;
    Ok(shared
        .shares
        .into_iter()
        .map(|s| TokenShard {
            k,
            n,
            index: s.share_index,
            payload: s.payload,
        })
        .collect())
}

/// Recovers a token from at least `k` shards with distinct indices.
pub fn recover_token(shards: &[TokenShard]) -> Result<StorageToken> {
    let first = shards.first().ok_or(VaultError::Unavailable { needed: 2, got: 0 })?;
    let (k, n) = (first.k, first.n);
    let mut seen = vec![false; n];
    let mut usable: Vec<ShareFile> = Vec::with_capacity(k);
    for s in shards {
        if s.k != k || s.n != n || s.payload.len() != first.payload.len() {
            return Err(VaultError::InvalidInput("shards come from different splits".into()));
        }
        if !std::mem::replace(&mut seen[s.index], true) && usable.len() < k {
            usable.push(ShareFile {
                share_index: s.index,
                payload: s.payload.clone(),
            });
        }
    }
    if usable.len() < k {
        return Err(VaultError::Unavailable {
            needed: k,
            got: usable.len(),
        });
    }
    let refs: Vec<&ShareFile> = usable.iter().collect();
    let secret = Zeroizing::new(
        reconstruct_file(&refs, &scheme(k, n)?, first.payload.len())
            .map_err(|e| VaultError::InvalidInput(e.to_string()))?,
    );
    let corrupt = || VaultError::Integrity("recovered token is malformed".into());
    let len = u16::from_be_bytes([secret[0], secret[1]]) as usize;
    let body = secret.get(2..2 + len).ok_or_else(corrupt)?;
    let text = std::str::from_utf8(body).map_err(|_| corrupt())?;
    StorageToken::new(text).map_err(|_| corrupt())
}

/// Stores shard `i` of `tok` under `name` in `stores[i]`.
pub fn shard_token_across_vaults<R: TryCryptoRng + ?Sized>(
    tok: &StorageToken,
    name: &str,
    stores: &mut [&mut dyn TokenStore],
    k: usize,
    rng: &mut R,
) -> Result<()> {
    let shards = shard_token(tok, k, stores.len(), rng)?;
    for (store, shard) in stores.iter_mut().zip(&shards) {
        store.store_token(name, shard.encode())?;
    }
    Ok(())
}

/// Collects shards of `name` from whichever stores answer and recovers the
/// token once `k` are in hand.
pub fn recover_token_from_vaults(name: &str, stores: &mut [&mut dyn TokenStore], k: usize) -> Result<StorageToken> {
    let mut shards = Vec::with_capacity(k);
    for store in stores.iter_mut() {
        if shards.len() == k {
            break;
        }
        if let Ok(shard) = store.fetch_token(name).and_then(|t| TokenShard::decode(&t)) {
            if shard.k == k {
                shards.push(shard);
            }
        }
    }
    if shards.len() < k {
        return Err(VaultError::Unavailable {
            needed: k,
            got: shards.len(),
        });
    }
    recover_token(&shards)
}
