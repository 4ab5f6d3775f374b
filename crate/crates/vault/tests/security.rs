use std::fs;

use rand::rngs::ChaCha20Rng;
use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use xorsplit_storage::StorageToken;
use xorsplit_vault::{shard_token, KdfParams, MasterPassword, Vault, VaultError, VaultOptions};

fn opts() -> VaultOptions {
    VaultOptions {
        kdf: KdfParams::insecure_fast(),
        ..VaultOptions::default()
    }
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

#[test]
fn file_never_contains_token_or_password_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v");
    let pw = MasterPassword::new("a very memorable master password").unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let mut v = Vault::create(&path, &pw, &opts()).unwrap();
    let toks: Vec<_> = (0..20).map(|_| StorageToken::generate(&mut rng).unwrap()).collect();
    for (i, t) in toks.iter().enumerate() {
        v.store_token(&format!("server-{i}"), t.clone()).unwrap();
    }
    drop(v);
    let bytes = fs::read(&path).unwrap();
    for t in &toks {
        // any 8-octet window of the token
        for w in t.expose().as_bytes().windows(8) {
            assert!(!contains(&bytes, w));
        }
    }
    assert!(!contains(&bytes, b"memorable"));
    assert!(!contains(&bytes, b"server-"));
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers.len(), 2, "{leftovers:?}"); // vault + lock file
}

#[test]
fn every_single_octet_modification_fails_closed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v");
    let pw = MasterPassword::new("pw").unwrap();
    let mut v = Vault::create(&path, &pw, &opts()).unwrap();
    v.store_token("s", StorageToken::new("x".repeat(32)).unwrap()).unwrap();
    drop(v);
    let orig = fs::read(&path).unwrap();
    for i in 0..orig.len() {
        let mut b = orig.clone();
        b[i] = b[i].wrapping_add(1 + (i % 255) as u8);
        fs::write(&path, &b).unwrap();
        match Vault::open(&path, &pw, &opts()) {
            Err(VaultError::Integrity(_)) => {}
            other => panic!("octet {i}: {other:?}"),
        }
    }
    fs::write(&path, &orig[..orig.len() - 1]).unwrap();
    assert!(matches!(
        Vault::open(&path, &pw, &opts()),
        Err(VaultError::Integrity(_))
    ));
}

#[test]
fn wrong_passwords_never_open() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v");
    let mut v = Vault::create(&path, &MasterPassword::new("right").unwrap(), &opts()).unwrap();
    v.store_token("s", StorageToken::new("y".repeat(32)).unwrap()).unwrap();
    drop(v);
    for i in 0..100 {
        let pw = MasterPassword::new(format!("wrong-{i}")).unwrap();
        assert!(matches!(
            Vault::open(&path, &pw, &opts()),
            Err(VaultError::WrongPassword)
        ));
    }
}

#[test]
fn single_shards_are_flat() {
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let mut counts = [[0u64; 256]; 3];
    for _ in 0..2000 {
        let tok = StorageToken::generate(&mut rng).unwrap();
        for s in shard_token(&tok, 2, 3, &mut rng).unwrap() {
            for b in &s.payload {
                counts[s.index][*b as usize] += 1;
            }
        }
    }
    let dist = ChiSquared::new(255.0).unwrap();
    for c in counts {
        let total: u64 = c.iter().sum();
        let e = total as f64 / 256.0;
        let stat: f64 = c.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
        let p = 1.0 - dist.cdf(stat);
        assert!(p > 0.001, "p = {p}");
    }
}
