//! The TOML configuration file.
//!
//! ```toml
//! k = 2
//! n = 3
//! block_bits = 2048
//! split_threshold = 1048576
//! chunk_size = 1048576
//! vault_path = "vault.bin"
//! state_dir = "state"
//! threads = 4
//!
//! [retry]
//! max_retries = 3
//! base_delay_ms = 100
//! max_delay_ms = 2000
//!
//! [[backends]]
//! name = "s1"
//! kind = "local-dir"        # or "http", "memory"
//! endpoint = "backends/s1"  # directory, or base URL for http
//! share_index = 0
//! ```
//!
//! Relative paths are taken from the directory holding the config file.
//! Backends are tried for downloads in the order listed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xorsplit_core::{BlockBits, ChunkPlan, SharingScheme};
use xorsplit_storage::{validate_descriptors, BackendDescriptor, BackendKind, RetryPolicy};

use crate::exit::CliError;

fn default_block_bits() -> u32 {
    2048
}

fn default_mib() -> usize {
    xorsplit_core::pipeline::MIB
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub k: usize,
    pub n: usize,
    #[serde(default = "default_block_bits")]
    pub block_bits: u32,
    #[serde(default = "default_mib")]
    pub split_threshold: usize,
    #[serde(default = "default_mib")]
    pub chunk_size: usize,
    pub vault_path: PathBuf,
    pub state_dir: PathBuf,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    pub backends: Vec<BackendDescriptor>,
}

/// Command-line overrides of config values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub block_bits: Option<u32>,
}

impl Config {
    /// Local-directory backends under `backends/` with a `(k, n)` layout.
    pub fn scaffold(k: usize, backends: Vec<BackendDescriptor>) -> Config {
        Config {
            k,
            n: backends.len(),
            block_bits: default_block_bits(),
            split_threshold: default_mib(),
            chunk_size: default_mib(),
            vault_path: "vault.bin".into(),
            state_dir: "state".into(),
            threads: default_threads(),
            retry: RetryPolicy::default(),
            backends,
        }
    }

    pub fn local_backends(n: usize) -> Vec<BackendDescriptor> {
        (0..n)
            .map(|i| BackendDescriptor {
                name: format!("s{}", i + 1),
                kind: BackendKind::LocalDir,
                endpoint: format!("backends/s{}", i + 1),
                share_index: i,
            })
            .collect()
    }

    pub fn load(path: &Path, overrides: Overrides) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Config =
            toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        if let Some(k) = overrides.k {
            cfg.k = k;
        }
        if let Some(n) = overrides.n {
            cfg.n = n;
        }
        if let Some(b) = overrides.block_bits {
            cfg.block_bits = b;
        }
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        self.vault_path = abs(&self.vault_path);
        self.state_dir = abs(&self.state_dir);
        for b in &mut self.backends {
            if b.kind == BackendKind::LocalDir {
                b.endpoint = abs(Path::new(&b.endpoint)).display().to_string();
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n != self.backends.len() {
            return Err(CliError::usage(format!(
                "n = {} but {} backends are configured",
                self.n,
                self.backends.len()
            )));
        }
        if self.k > self.n {
            return Err(CliError::usage(format!("k = {} exceeds n = {}", self.k, self.n)));
        }
        if self.threads == 0 {
            return Err(CliError::usage("threads must be at least 1"));
        }
        validate_descriptors(&self.backends).map_err(|e| CliError::usage(e.to_string()))?;
        self.scheme()?;
        self.plan()?;
        Ok(())
    }

    pub fn scheme(&self) -> Result<SharingScheme, CliError> {
        let bits = BlockBits::new(self.block_bits).map_err(|e| CliError::usage(e.to_string()))?;
        SharingScheme::new(self.k, self.n, bits).map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn plan(&self) -> Result<ChunkPlan, CliError> {
        ChunkPlan::new(self.split_threshold, self.chunk_size).map_err(|e| CliError::usage(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaffold_roundtrips_through_toml() {
        let cfg = Config::scaffold(2, Config::local_backends(3));
        let text = cfg.to_toml();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(text.contains("kind = \"local-dir\""));
    }

    #[test]
    fn load_resolves_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, Config::scaffold(2, Config::local_backends(3)).to_toml()).unwrap();
        let cfg = Config::load(&path, Overrides::default()).unwrap();
        assert_eq!(cfg.vault_path, dir.path().join("vault.bin"));
        assert_eq!(
            cfg.backends[2].endpoint,
            dir.path().join("backends/s3").display().to_string()
        );

        let cfg = Config::load(
            &path,
            Overrides {
                block_bits: Some(256),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.block_bits, 256);
        assert!(Config::load(
            &path,
            Overrides {
                n: Some(4),
                ..Default::default()
            }
        )
        .is_err());
        assert!(Config::load(
            &path,
            Overrides {
                block_bits: Some(100),
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn minimal_file_takes_defaults() {
        let text = r#"
            k = 2
            n = 3
            vault_path = "v"
            state_dir = "s"
            [[backends]]
            name = "a"
            kind = "memory"
            share_index = 0
            [[backends]]
            name = "b"
            kind = "memory"
            share_index = 1
            [[backends]]
            name = "c"
            kind = "memory"
            share_index = 2
        "#;
        let cfg: Config = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.block_bits, 2048);
        assert_eq!(cfg.retry, RetryPolicy::default());
        assert!(toml::from_str::<Config>(&format!("bogus = 1\n{text}")).is_err());
        assert!(toml::from_str::<Config>(&format!("{text}\nbogus = 1")).is_err(), "inside a backend entry");
    }
}
