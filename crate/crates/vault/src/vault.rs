use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::TryRng;
use xorsplit_storage::StorageToken;
use zeroize::Zeroizing;

use crate::error::{io_err, Result, VaultError};
use crate::format::{self, Header, KdfParams, NONCE_LEN, SALT_LEN};
use crate::password::MasterPassword;
use crate::store::TokenStore;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(15 * 60);

#[derive(Debug, Clone)]
pub struct VaultOptions {
    /// Cost parameters for newly created vaults. Existing vaults use the
    /// parameters in their header.
    pub kdf: KdfParams,
    /// How long unsealed tokens stay usable after unlocking.
    pub session_ttl: Duration,
    /// Pause before reporting a wrong password.
    pub attempt_delay: Duration,
}

impl Default for VaultOptions {
    fn default() -> Self {
        VaultOptions {
            kdf: KdfParams::default(),
            session_ttl: DEFAULT_SESSION_TTL,
            attempt_delay: Duration::ZERO,
        }
    }
}

/// An unlocked vault. Holds an exclusive advisory lock on the vault until
/// dropped; a second `open` of the same path blocks.
pub struct Vault {
    path: PathBuf,
    header: Header,
    key: Option<Zeroizing<[u8; 32]>>,
    entries: BTreeMap<String, StorageToken>,
    unlocked_at: Instant,
    ttl: Duration,
    _lock: File,
}

fn lock_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".lock");
    PathBuf::from(p)
}

fn acquire_lock(path: &Path) -> Result<File> {
    let lp = lock_path(path);
    let f = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(&lp)
        .map_err(io_err(&lp))?;
    f.lock().map_err(io_err(&lp))?;
    Ok(f)
}

fn random<const N: usize>() -> Result<[u8; N]> {
    let mut b = [0u8; N];
    rand::rngs::SysRng
        .try_fill_bytes(&mut b)
        .map_err(|e| VaultError::Randomness(e.to_string()))?;
    Ok(b)
}

fn tmp_path(path: &Path) -> Result<PathBuf> {
    let suffix = hex::encode(random::<8>()?);
    let mut p = path.as_os_str().to_owned();
    p.push(format!(".tmp-{suffix}"));
    Ok(PathBuf::from(p))
}

fn write_synced(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut opts = OpenOptions::new();
    opts.write(true).create_new(true);
    #[cfg(unix)]
    std::os::unix::fs::OpenOptionsExt::mode(&mut opts, 0o600);
    let mut f = opts.open(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

impl Vault {
    /// Creates an empty vault at `path`. Fails if anything exists there.
    pub fn create(path: impl AsRef<Path>, pw: &MasterPassword, opts: &VaultOptions) -> Result<Vault> {
        let path = path.as_ref();
        let lock = acquire_lock(path)?;
        if path.exists() {
            return Err(VaultError::Exists(path.to_path_buf()));
        }
        let salt = random::<SALT_LEN>()?;
        let keys = format::derive(pw, &opts.kdf, &salt)?;
        let vault = Vault {
            path: path.to_path_buf(),
            header: Header {
                kdf: opts.kdf,
                salt,
                verifier: keys.verifier,
            },
            key: Some(keys.key),
            entries: BTreeMap::new(),
            unlocked_at: Instant::now(),
            ttl: opts.session_ttl,
            _lock: lock,
        };
        let bytes = vault.sealed_bytes()?;
        // Link rather than rename so a concurrent creator cannot be clobbered.
        let tmp = tmp_path(path)?;
        write_synced(&tmp, &bytes)?;
        let linked = fs::hard_link(&tmp, path);
        let _ = fs::remove_file(&tmp);
        match linked {
            Ok(()) => Ok(vault),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(VaultError::Exists(path.to_path_buf())),
            Err(e) => Err(io_err(path)(e)),
        }
    }

    /// Unlocks the vault at `path`.
    pub fn open(path: impl AsRef<Path>, pw: &MasterPassword, opts: &VaultOptions) -> Result<Vault> {
        let path = path.as_ref();
        let lock = acquire_lock(path)?;
        let bytes = fs::read(path).map_err(io_err(path))?;
        let sealed = format::parse(&bytes)?;
        let keys = format::derive(pw, &sealed.header.kdf, &sealed.header.salt)?;
        if !format::verifier_matches(&keys.verifier, &sealed.header.verifier) {
            if !opts.attempt_delay.is_zero() {
                std::thread::sleep(opts.attempt_delay);
            }
            return Err(VaultError::WrongPassword);
        }
        let entries = sealed.open(&keys.key)?;
        Ok(Vault {
            path: path.to_path_buf(),
            header: sealed.header,
            key: Some(keys.key),
            entries,
            unlocked_at: Instant::now(),
            ttl: opts.session_ttl,
            _lock: lock,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn kdf_params(&self) -> KdfParams {
        self.header.kdf
    }

    /// Whether the session has outlived its TTL. Expiry wipes the unsealed
    /// tokens and key on the next access.
    pub fn is_expired(&self) -> bool {
        self.key.is_none() || self.unlocked_at.elapsed() > self.ttl
    }

    fn live(&mut self) -> Result<()> {
        if self.is_expired() {
            self.wipe();
            return Err(VaultError::SessionExpired);
        }
        Ok(())
    }

    fn wipe(&mut self) {
        self.entries.clear();
        self.key = None;
    }

    /// Starts a fresh session, re-reading the file.
    pub fn unlock(&mut self, pw: &MasterPassword) -> Result<()> {
        let bytes = fs::read(&self.path).map_err(io_err(&self.path))?;
        let sealed = format::parse(&bytes)?;
        let keys = format::derive(pw, &sealed.header.kdf, &sealed.header.salt)?;
        if !format::verifier_matches(&keys.verifier, &sealed.header.verifier) {
            return Err(VaultError::WrongPassword);
        }
        self.entries = sealed.open(&keys.key)?;
        self.header = sealed.header;
        self.key = Some(keys.key);
        self.unlocked_at = Instant::now();
        Ok(())
    }

    /// Ends the session now.
    pub fn close(mut self) {
        self.wipe();
    }

    pub fn names(&mut self) -> Result<Vec<String>> {
        self.live()?;
        Ok(self.entries.keys().cloned().collect())
    }

    /// Stores `tok` under `name`, replacing any previous token, and reseals
    /// the file with a fresh nonce.
    pub fn store_token(&mut self, name: &str, tok: StorageToken) -> Result<()> {
        self.live()?;
        if name.is_empty() || name.len() > u16::MAX as usize {
            return Err(VaultError::InvalidInput(format!("bad entry name {name:?}")));
        }
        let previous = self.entries.insert(name.to_string(), tok);
        if let Err(e) = self.save() {
            match previous {
                Some(p) => self.entries.insert(name.to_string(), p),
                None => self.entries.remove(name),
            };
            return Err(e);
        }
        Ok(())
    }

    pub fn fetch_token(&mut self, name: &str) -> Result<StorageToken> {
        self.live()?;
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| VaultError::UnknownName(name.to_string()))
    }

    pub fn remove_token(&mut self, name: &str) -> Result<bool> {
        self.live()?;
        let Some(old) = self.entries.remove(name) else {
            return Ok(false);
        };
        if let Err(e) = self.save() {
            self.entries.insert(name.to_string(), old);
            return Err(e);
        }
        Ok(true)
    }

    fn sealed_bytes(&self) -> Result<Vec<u8>> {
        let key = self.key.as_ref().ok_or(VaultError::SessionExpired)?;
        format::seal(&self.header, key, &random::<NONCE_LEN>()?, &self.entries)
    }

    fn save(&self) -> Result<()> {
        let bytes = self.sealed_bytes()?;
        let tmp = tmp_path(&self.path)?;
        write_synced(&tmp, &bytes)?;
        fs::rename(&tmp, &self.path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io_err(&self.path)(e)
        })
    }
}

impl std::fmt::Debug for Vault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Vault")
            .field("path", &self.path)
            .field("entries", &self.entries.len())
            .field("expired", &self.is_expired())
            .finish()
    }
}

impl TokenStore for Vault {
    fn store_token(&mut self, name: &str, tok: StorageToken) -> Result<()> {
        Vault::store_token(self, name, tok)
    }

    fn fetch_token(&mut self, name: &str) -> Result<StorageToken> {
        Vault::fetch_token(self, name)
    }
}

/// Creates an empty vault at `path` with default options.
pub fn vault_create(path: impl AsRef<Path>, pw: &MasterPassword) -> Result<Vault> {
    Vault::create(path, pw, &VaultOptions::default())
}

/// Opens the vault, stores one token and closes it.
pub fn store_token(path: impl AsRef<Path>, name: &str, tok: StorageToken, pw: &MasterPassword) -> Result<()> {
    Vault::open(path, pw, &VaultOptions::default())?.store_token(name, tok)
}

/// Opens the vault, fetches one token and closes it.
pub fn fetch_token(path: impl AsRef<Path>, name: &str, pw: &MasterPassword) -> Result<StorageToken> {
    Vault::open(path, pw, &VaultOptions::default())?.fetch_token(name)
}
