//! Upload to n backends, download from any k.

use std::sync::Arc;

use rand::rngs::ChaCha20Rng;
use rand::SeedableRng;
use xorsplit_core::{
    reconstruct_file, share_file, BlockBits, ChunkPlan, Manifest, Placement, ShareFile, SharingScheme,
};
use xorsplit_storage::mock::{FaultConfig, MockConfig, MockServer};
use xorsplit_storage::{
    download_any_k, fetch_all_shares, list_file_ids, read_manifest, upload_all, upload_objects, BackendTarget,
    HttpBackend, MemoryBackend, ObjectKey, RetryPolicy, StorageError, StorageToken,
};

fn token(i: usize) -> StorageToken {
    StorageToken::new(format!("token-for-backend-{i:04}")).unwrap()
}

struct Fixture {
    mems: Vec<Arc<MemoryBackend>>,
    targets: Vec<BackendTarget>,
    manifest: Manifest,
    data: Vec<u8>,
}

fn fixture(k: usize, n: usize, len: usize) -> Fixture {
    let mut rng = ChaCha20Rng::seed_from_u64(len as u64);
    let data: Vec<u8> = (0..len).map(|i| (i * 31 % 251) as u8).collect();
    let scheme = SharingScheme::new(k, n, BlockBits::new(256).unwrap()).unwrap();
    let chunk = share_file(&data, &scheme, &mut rng).unwrap();
    let mems: Vec<_> = (0..n).map(|i| Arc::new(MemoryBackend::new(&format!("m{i}")))).collect();
    let targets: Vec<_> = mems
        .iter()
        .enumerate()
        .map(|(i, m)| BackendTarget::new(m.clone(), token(i), i))
        .collect();
    let placement = (0..n)
        .map(|i| Placement {
            backend: format!("m{i}"),
            share_index: i,
        })
        .collect();
    let manifest = Manifest::new(
        "fileA",
        "a.bin",
        &scheme,
        ChunkPlan::default(),
        &[(len as u64, &chunk)],
        placement,
    )
    .unwrap();
    let report = upload_all(&targets, &manifest, std::slice::from_ref(&chunk)).unwrap();
    assert!(report.is_complete());
    Fixture {
        mems,
        targets,
        manifest,
        data,
    }
}

fn rebuild(f: &Fixture, shares: &[xorsplit_storage::DownloadedShare]) -> Vec<u8> {
    let chunk0: Vec<&ShareFile> = shares.iter().map(|s| &s.chunks[0]).collect();
    reconstruct_file(&chunk0, &f.manifest.scheme().unwrap(), f.data.len()).unwrap()
}

#[test]
fn every_backend_holds_one_share_and_a_manifest() {
    let f = fixture(2, 3, 1000);
    for (i, t) in f.targets.iter().enumerate() {
        let keys = t.backend.list_objects("", &t.token).unwrap();
        assert_eq!(
            keys,
            vec!["fileA.c0.s".to_string() + &i.to_string(), "fileA.manifest".into()]
        );
    }
    let (ids, failures) = list_file_ids(&f.targets);
    assert_eq!(ids, ["fileA"]);
    assert!(failures.is_empty());
}

#[test]
fn any_k_reconstructs() {
    for (k, n) in [(2, 3), (2, 4), (3, 5)] {
        let f = fixture(k, n, 777);
        let dl = download_any_k(&f.manifest, &f.targets, k).unwrap();
        assert_eq!(dl.shares.len(), k);
        assert_eq!(rebuild(&f, &dl.shares), f.data);
    }
}

#[test]
fn down_backend_is_skipped() {
    let f = fixture(2, 3, 500);
    f.mems[0].set_down(true);
    let dl = download_any_k(&f.manifest, &f.targets, 2).unwrap();
    let names: Vec<_> = dl.shares.iter().map(|s| s.backend.as_str()).collect();
    assert_eq!(names, ["m1", "m2"]);
    assert!(matches!(dl.failures[..], [StorageError::Unavailable { .. }]));
    assert_eq!(rebuild(&f, &dl.shares), f.data);
}

#[test]
fn tampered_share_falls_through_to_the_next_backend() {
    let f = fixture(2, 3, 500);
    assert!(f.mems[1].tamper("fileA.c0.s1", |v| v[3] ^= 0x40));
    let dl = download_any_k(&f.manifest, &f.targets, 2).unwrap();
    let names: Vec<_> = dl.shares.iter().map(|s| s.backend.as_str()).collect();
    assert_eq!(names, ["m0", "m2"]);
    assert_eq!(
        dl.failures,
        [StorageError::Integrity {
            backend: "m1".into(),
            key: "fileA.c0.s1".into()
        }]
    );
    assert_eq!(rebuild(&f, &dl.shares), f.data);

    // without digest checks the tampered payload is returned as-is
    let all = fetch_all_shares(&f.manifest, &f.targets);
    assert_eq!(all.shares.len(), 3);
}

#[test]
fn too_few_backends_names_every_cause() {
    let f = fixture(2, 3, 100);
    f.mems[0].set_down(true);
    f.mems[2].set_down(true);
    match download_any_k(&f.manifest, &f.targets, 2) {
        Err(StorageError::InsufficientShares {
            needed: 2,
            available: 1,
            causes,
        }) => assert_eq!(causes.len(), 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn manifest_majority_survives_one_bad_replica() {
    let f = fixture(2, 3, 100);
    f.mems[2].tamper("fileA.manifest", |v| v[5] ^= 1);
    let read = read_manifest("fileA", &f.targets).unwrap();
    assert_eq!(read.manifest, f.manifest);
    assert_eq!(read.dissenting, ["m2"]);

    f.mems[0].set_down(true);
    f.mems[1].set_down(true);
    assert!(read_manifest("fileA", &f.targets).is_err());
}

#[test]
fn failed_upload_reports_pending_objects_and_resumes() {
    let tok = token(0);
    let server = MockServer::start(MockConfig::new([tok.clone()])).unwrap();
    let http = Arc::new(HttpBackend::new("web", &server.url(), RetryPolicy::none()).unwrap());
    let target = BackendTarget::new(http, tok, 0);
    let objects = vec![
        (ObjectKey::share("f", 0, 0).unwrap(), &b"abc"[..]),
        (ObjectKey::manifest("f").unwrap(), &b"{}"[..]),
    ];
    server.set_fault(FaultConfig {
        down: true,
        ..FaultConfig::default()
    });
    let out = upload_objects(&target, &objects);
    assert!(!out.is_ok());
    assert_eq!(out.pending.len(), 2);
    assert!(out.error.unwrap().is_transient());

    server.set_fault(FaultConfig::default());
    let out = upload_objects(&target, &objects);
    assert!(out.is_ok());
    assert_eq!(server.keys(), ["f.c0.s0", "f.manifest"]);
}
