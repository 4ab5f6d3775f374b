//! Token vault sealed under one master password.
//!
//! A vault is a single file: a header with the Argon2id parameters and salt,
//! then the whole entry table sealed with XChaCha20-Poly1305. See
//! [`format`] for the byte layout.
//!
//! ```
//! use xorsplit_vault::{KdfParams, MasterPassword, Vault, VaultOptions};
//! use xorsplit_storage::StorageToken;
//!
//! let dir = tempfile::tempdir().unwrap();
//! let path = dir.path().join("tokens.vault");
//! let pw = MasterPassword::new("correct horse battery staple").unwrap();
//! let opts = VaultOptions { kdf: KdfParams::insecure_fast(), ..Default::default() };
//!
//! let mut vault = Vault::create(&path, &pw, &opts).unwrap();
//! vault.store_token("drive", StorageToken::new("0123456789abcdef0123").unwrap()).unwrap();
//! drop(vault);
//!
//! let mut vault = Vault::open(&path, &pw, &opts).unwrap();
//! assert_eq!(vault.fetch_token("drive").unwrap().expose(), "0123456789abcdef0123");
//! ```

mod error;
pub mod format;
mod password;
mod shard;
mod store;
mod vault;

pub use error::{Result, VaultError};
pub use format::KdfParams;
pub use password::MasterPassword;
pub use shard::{recover_token, recover_token_from_vaults, shard_token, shard_token_across_vaults, TokenShard};
pub use store::{MemoryTokenStore, TokenStore};
pub use vault::{fetch_token, store_token, vault_create, Vault, VaultOptions, DEFAULT_SESSION_TTL};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/vault.md")]
mod book_vault {}
