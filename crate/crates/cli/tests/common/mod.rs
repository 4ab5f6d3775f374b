//! Three mock blob servers, a config pointing at them and a vault holding
//! their tokens.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rand::{Rng, RngExt, SeedableRng};
use xorsplit_cli::config::Config;
use xorsplit_cli::Session;
use xorsplit_storage::mock::{FaultConfig, MockConfig, MockServer};
use xorsplit_storage::{BackendDescriptor, BackendKind, RetryPolicy, StorageToken};
use xorsplit_vault::{KdfParams, MasterPassword, Vault, VaultOptions};

pub const PASSWORD: &str = "correct horse battery staple 1729";

pub struct Cluster {
    pub dir: tempfile::TempDir,
    pub servers: Vec<MockServer>,
    pub tokens: Vec<String>,
}

impl Cluster {
    pub fn new(n: usize) -> Cluster {
        let mut rng = rand::rngs::ChaCha20Rng::seed_from_u64(n as u64);
        let tokens: Vec<String> = (0..n)
            .map(|i| format!("tok{i}-{:032x}", rng.random::<u128>()))
            .collect();
        let servers = tokens
            .iter()
            .map(|t| MockServer::start(MockConfig::new([StorageToken::new(t.clone()).unwrap()])).unwrap())
            .collect();
        Cluster {
            dir: tempfile::tempdir().unwrap(),
            servers,
            tokens,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn config_path(&self) -> PathBuf {
        self.path("xorsplit.toml")
    }

    pub fn backend_args(&self) -> Vec<String> {
        self.servers
            .iter()
            .enumerate()
            .flat_map(|(i, s)| ["--backend".to_string(), format!("s{}=http:{}", i + 1, s.url())])
            .collect()
    }

    pub fn fault(&self, i: usize, fault: FaultConfig) {
        self.servers[i].set_fault(fault);
    }

    pub fn heal(&self) {
        for s in &self.servers {
            s.set_fault(FaultConfig::default());
        }
    }

    /// Runs the binary in the cluster directory with the password and
    /// tokens in its environment.
    pub fn run(&self, args: &[&str]) -> Output {
        self.run_with_password(PASSWORD, args)
    }

    pub fn run_with_password(&self, pw: &str, args: &[&str]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_xorsplit"));
        cmd.current_dir(self.dir.path())
            .arg("--config")
            .arg(self.config_path())
            .args(args)
            .env("PASSAT_PW", pw)
            .env_remove("RUST_LOG")
            .stdin(Stdio::null());
        for (i, t) in self.tokens.iter().enumerate() {
            cmd.env(format!("PASSAT_TOKEN_S{}", i + 1), t);
        }
        cmd.output().unwrap()
    }

    pub fn init(&self) {
        let mut args = vec!["init"];
        let backends = self.backend_args();
        args.extend(backends.iter().map(String::as_str));
        let out = self.run(&args);
        assert_eq!(code(&out), 0, "init failed: {}", stderr(&out));
    }

    /// An in-process session equivalent to what `init` would set up, with
    /// cheap key derivation.
    pub fn session(&self, k: usize) -> Session {
        let backends = self
            .servers
            .iter()
            .enumerate()
            .map(|(i, s)| BackendDescriptor {
                name: format!("s{}", i + 1),
                kind: BackendKind::Http,
                endpoint: s.url(),
                share_index: i,
            })
            .collect();
        let mut cfg = Config::scaffold(k, backends);
        cfg.vault_path = self.path("vault.bin");
        cfg.state_dir = self.path("state");
        cfg.retry = RetryPolicy {
            max_retries: 1,
            base_delay_ms: 5,
            max_delay_ms: 10,
        };
        let pw = MasterPassword::new(PASSWORD).unwrap();
        let opts = VaultOptions {
            kdf: KdfParams::insecure_fast(),
            ..VaultOptions::default()
        };
        if !cfg.vault_path.exists() {
            let mut v = Vault::create(&cfg.vault_path, &pw, &opts).unwrap();
            for (b, t) in cfg.backends.iter().zip(&self.tokens) {
                v.store_token(&b.name, StorageToken::new(t.clone()).unwrap()).unwrap();
            }
        }
        Session::open(cfg, &pw, &opts).unwrap()
    }
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn random_file(dir: &Path, name: &str, len: usize, seed: u64) -> (PathBuf, Vec<u8>) {
    let mut rng = rand::rngs::ChaCha20Rng::seed_from_u64(seed);
    let mut data = vec![0u8; len];
    rng.fill_bytes(&mut data);
    let path = dir.join(name);
    std::fs::write(&path, &data).unwrap();
    (path, data)
}

/// Every regular file below `root`.
pub fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out
}

pub fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}
