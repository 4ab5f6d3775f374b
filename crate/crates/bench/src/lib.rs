//! Latency sweeps.
//!
//! Every suite checks the operation it times once before timing it. Timings
//! come from [`std::time::Instant`] and run on the calling thread unless a
//! suite says otherwise. Results are [`BenchRow`]s with the columns listed
//! in [`COLUMNS`].

mod report;

use std::sync::Arc;
use std::time::Duration;

use rand::rngs::ChaCha12Rng;
use rand::{Rng, SeedableRng};
use thiserror::Error;
use xorsplit_core::block::{reconstruct23, share23, Block, BlockBits, SharingRandomness};
use xorsplit_core::{
    merge, reconstruct_file, share_chunks_parallel, share_file, split, ChunkPlan, ShareFile, SharingScheme,
};
use xorsplit_storage::mock::{MockConfig, MockServer};
use xorsplit_storage::{Backend, HttpBackend, ObjectKey, RetryPolicy, StorageToken};

pub use report::{machine_fingerprint, time, BenchReport, BenchRow, Stats, COLUMNS};

pub const BLOCK_BITS_GRID: [u32; 6] = [256, 512, 1024, 2048, 4096, 8192];
pub const FILE_SIZES: [usize; 4] = [10_000, 100_000, 1_000_000, 10_000_000];
pub const SPLIT_FILE_SIZE: usize = 100_000_000;
pub const SPLIT_CHUNK_SIZE: usize = 1_000_000;
pub const MIN_ITERATIONS: usize = 100;
/// Blocks per block-level sample; reported times are per block.
pub const BLOCK_BATCH: u32 = 1000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least {MIN_ITERATIONS} iterations are required, got {0}")]
    TooFewIterations(usize),
    #[error(transparent)]
    Sharing(#[from] xorsplit_core::Error),
    #[error(transparent)]
    Storage(#[from] xorsplit_storage::StorageError),
    #[error("correctness check failed: {0}")]
    Incorrect(String),
    #[error("mock server: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

fn check_iterations(n: usize) -> Result<()> {
    if n < MIN_ITERATIONS {
        return Err(BenchError::TooFewIterations(n));
    }
    Ok(())
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(BenchError::Incorrect(what()))
    }
}

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn synthetic(len: usize, seed: u64) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng(seed).fill_bytes(&mut v);
    v
}

struct Row<'a> {
    machine: &'a str,
    operation: &'a str,
    file_size: usize,
    block_bits: u32,
    ratio: Option<f64>,
}

impl Row<'_> {
    fn with(self, samples: &[Duration]) -> BenchRow {
        let s = Stats::from_samples(samples);
        BenchRow {
            machine: self.machine.to_string(),
            operation: self.operation.to_string(),
            file_size: self.file_size,
            block_bits: self.block_bits,
            iterations: samples.len(),
            mean_us: s.mean_us,
            p50_us: s.p50_us,
            p95_us: s.p95_us,
            ratio: self.ratio,
        }
    }
}

/// Per-block `share23` (including drawing the randomness) and
/// `reconstruct23` latency for each block size. Reconstruction cycles
/// through the three share pairs.
pub fn bench_block(block_bits: &[u32], iterations: usize) -> Result<BenchReport> {
    check_iterations(iterations)?;
    let machine = machine_fingerprint();
    let mut report = BenchReport::default();
    for &d in block_bits {
        let bits = BlockBits::new(d)?;
        let mut r = rng(d as u64);
        let secret = Block::new(bits, synthetic(bits.octets(), 1))?;
        let shares = share23(&secret, &SharingRandomness::generate(bits, &mut r)?)?;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            ensure(reconstruct23(&shares[a], &shares[b])? == secret, || {
                format!("d={d} pair ({a},{b})")
            })?;
        }

        let share_samples = time(iterations, |_| {
            for _ in 0..BLOCK_BATCH {
                let rand = SharingRandomness::generate(bits, &mut r).expect("rng");
                std::hint::black_box(share23(&secret, &rand).expect("share"));
            }
        });
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let recon_samples = time(iterations, |i| {
            let (a, b) = pairs[i % 3];
            for _ in 0..BLOCK_BATCH {
                std::hint::black_box(reconstruct23(&shares[a], &shares[b]).expect("reconstruct"));
            }
        });
        for (op, samples) in [("share23", share_samples), ("reconstruct23", recon_samples)] {
            let per_block: Vec<Duration> = samples.iter().map(|s| *s / BLOCK_BATCH).collect();
            report.rows.push(
                Row {
                    machine: &machine,
                    operation: op,
                    file_size: bits.octets(),
                    block_bits: d,
                    ratio: None,
                }
                .with(&per_block),
            );
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct FileBenchOptions {
    pub iterations: usize,
    /// Baseline upload time to compare sharing against, in microseconds,
    /// per file size. When absent the baseline is measured by uploading the
    /// unshared file to a local mock blob server.
    pub baseline_upload_us: Option<f64>,
}

impl Default for FileBenchOptions {
    fn default() -> Self {
        FileBenchOptions {
            iterations: MIN_ITERATIONS,
            baseline_upload_us: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FileSweep {
    pub report: BenchReport,
    /// For each file size, the block size with the lowest mean share time.
    pub argmin: Vec<(usize, u32)>,
}

/// `(2,3)` file sharing and reconstruction from each pair, for every file
/// size and block size. Also times a plain upload per size as baseline.
pub fn bench_file(sizes: &[usize], block_bits: &[u32], opts: &FileBenchOptions) -> Result<FileSweep> {
    check_iterations(opts.iterations)?;
    let iterations = opts.iterations;
    let machine = machine_fingerprint();
    let mut report = BenchReport::default();
    let mut argmin = Vec::new();

    let token = StorageToken::new("bench-baseline-token-0000")?;
    let server = match opts.baseline_upload_us {
        Some(_) => None,
        None => Some(MockServer::start(MockConfig::new([token.clone()]))?),
    };

    for &size in sizes {
        let data = synthetic(size, size as u64);
        let baseline_us = match (&server, opts.baseline_upload_us) {
            (_, Some(us)) => us,
            (Some(server), None) => {
                let http = HttpBackend::new("baseline", &server.url(), RetryPolicy::none())?;
                let key = ObjectKey::share("baseline", 0, 0)?;
                http.put_object(&key, &data, &token)?;
                ensure(http.get_object(&key, &token)? == data, || "baseline upload".into())?;
                let samples = time(iterations, |_| http.put_object(&key, &data, &token).expect("upload"));
                let row = Row {
                    machine: &machine,
                    operation: "baseline-upload",
                    file_size: size,
                    block_bits: 0,
                    ratio: None,
                }
                .with(&samples);
                let mean = row.mean_us;
                report.rows.push(row);
                mean
            }
            (None, None) => unreachable!(),
        };

        let mut best: Option<(f64, u32)> = None;
        for &d in block_bits {
            let scheme = SharingScheme::two_of_three(BlockBits::new(d)?)?;
            let mut r = rng(d as u64 ^ size as u64);
            let shared = share_file(&data, &scheme, &mut r)?;
            let pairs = [(0, 1), (0, 2), (1, 2)];
            for (a, b) in pairs {
                let got = reconstruct_file(&[&shared.shares[a], &shared.shares[b]], &scheme, size)?;
                ensure(got == data, || format!("size={size} d={d} pair ({a},{b})"))?;
            }

            let share_samples = time(iterations, |_| share_file(&data, &scheme, &mut r).expect("share"));
            let row = Row {
                machine: &machine,
                operation: "share",
                file_size: size,
                block_bits: d,
                ratio: None,
            }
            .with(&share_samples);
            let row = BenchRow {
                ratio: Some(row.mean_us / baseline_us),
                ..row
            };
            if best.is_none_or(|(m, _)| row.mean_us < m) {
                best = Some((row.mean_us, d));
            }
            report.rows.push(row);

            for (a, b) in pairs {
                let shares: [&ShareFile; 2] = [&shared.shares[a], &shared.shares[b]];
                let samples = time(iterations, |_| {
                    reconstruct_file(&shares, &scheme, size).expect("reconstruct")
                });
                let op = format!("reconstruct-{}{}", a + 1, b + 1);
                report.rows.push(
                    Row {
                        machine: &machine,
                        operation: &op,
                        file_size: size,
                        block_bits: d,
                        ratio: None,
                    }
                    .with(&samples),
                );
            }
        }
        if let Some((_, d)) = best {
            argmin.push((size, d));
        }
    }
    Ok(FileSweep { report, argmin })
}

/// Splitting a synthetic file into owned chunks, and merging them back.
pub fn bench_split(size: usize, chunk_size: usize, iterations: usize) -> Result<BenchReport> {
    check_iterations(iterations)?;
    let machine = machine_fingerprint();
    let plan = ChunkPlan::new(chunk_size, chunk_size)?;
    let data = synthetic(size, 7);
    let cut =
        |d: &[u8]| -> Vec<(u32, Vec<u8>)> { split(d, &plan).into_iter().map(|c| (c.tag, c.data.to_vec())).collect() };

    let chunks = cut(&data);
    ensure(chunks.len() == size.div_ceil(chunk_size), || {
        format!("{} chunks", chunks.len())
    })?;
    ensure(merge(chunks.clone())? == data, || "merge(split(f)) != f".into())?;

    let split_samples = time(iterations, |_| cut(&data));
    let mut merge_samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let input = chunks.clone();
        merge_samples.extend(time(1, |_| merge(input.clone()).expect("merge")));
    }
    let mut report = BenchReport::default();
    for (op, s) in [("split", split_samples), ("merge", merge_samples)] {
        report.rows.push(
            Row {
                machine: &machine,
                operation: op,
                file_size: size,
                block_bits: 0,
                ratio: None,
            }
            .with(&s),
        );
    }
    Ok(report)
}

/// Sequential versus worker-pool sharing of a multi-chunk file. The
/// `share-parallel` row carries the speedup as its ratio.
pub fn bench_parallel(
    size: usize,
    chunk_size: usize,
    block_bits: u32,
    threads: usize,
    iterations: usize,
) -> Result<BenchReport> {
    check_iterations(iterations)?;
    let machine = machine_fingerprint();
    let scheme = SharingScheme::two_of_three(BlockBits::new(block_bits)?)?;
    let data = synthetic(size, 11);
    let chunks: Vec<&[u8]> = data.chunks(chunk_size).collect();
    let seed = std::sync::atomic::AtomicU64::new(0);
    let make_rng = || rng(seed.fetch_add(1, std::sync::atomic::Ordering::Relaxed));

    let shared = share_chunks_parallel(&chunks, &scheme, threads, make_rng)?;
    for (c, s) in chunks.iter().zip(&shared) {
        let got = reconstruct_file(&[&s.shares[0], &s.shares[2]], &scheme, c.len())?;
        ensure(got == *c, || "parallel sharing roundtrip".into())?;
    }

    let seq = time(iterations, |_| {
        share_chunks_parallel(&chunks, &scheme, 1, make_rng).expect("share")
    });
    let par = time(iterations, |_| {
        share_chunks_parallel(&chunks, &scheme, threads, make_rng).expect("share")
    });
    let seq_row = Row {
        machine: &machine,
        operation: "share-sequential",
        file_size: size,
        block_bits,
        ratio: None,
    }
    .with(&seq);
    let par_row = Row {
        machine: &machine,
        operation: "share-parallel",
        file_size: size,
        block_bits,
        ratio: None,
    }
    .with(&par);
    let speedup = seq_row.mean_us / par_row.mean_us;
    Ok(BenchReport {
        rows: vec![
            seq_row,
            BenchRow {
                ratio: Some(speedup),
                ..par_row
            },
        ],
    })
}

/// Synthetic upload and download through three local mock blob servers.
/// Network effects are absent; these rows are not comparable with real
/// provider timings.
pub fn bench_transfer(sizes: &[usize], block_bits: u32, iterations: usize) -> Result<BenchReport> {
    use xorsplit_core::{Manifest, Placement};
    use xorsplit_storage::{download_any_k, upload_all, BackendTarget};

    check_iterations(iterations)?;
    let machine = machine_fingerprint();
    let token = StorageToken::new("bench-transfer-token-0000")?;
    let servers = (0..3)
        .map(|_| MockServer::start(MockConfig::new([token.clone()])))
        .collect::<std::io::Result<Vec<_>>>()?;
    let targets = servers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let b: Arc<dyn Backend> = Arc::new(HttpBackend::new(&format!("mock{i}"), &s.url(), RetryPolicy::none())?);
            Ok(BackendTarget::new(b, token.clone(), i))
        })
        .collect::<Result<Vec<_>>>()?;
    let scheme = SharingScheme::two_of_three(BlockBits::new(block_bits)?)?;
    let mut report = BenchReport::default();

    for &size in sizes {
        let data = synthetic(size, 3);
        let mut r = rng(5);
        let chunk = share_file(&data, &scheme, &mut r)?;
        let placement = (0..3)
            .map(|i| Placement {
                backend: format!("mock{i}"),
                share_index: i,
            })
            .collect();
        let manifest = Manifest::new(
            "bench",
            "bench.bin",
            &scheme,
            ChunkPlan::new(usize::MAX, xorsplit_core::pipeline::MIB)?,
            &[(size as u64, &chunk)],
            placement,
        )?;
        let chunks = std::slice::from_ref(&chunk);
        ensure(upload_all(&targets, &manifest, chunks)?.is_complete(), || {
            "upload".into()
        })?;
        let fetch = || -> Result<Vec<u8>> {
            let dl = download_any_k(&manifest, &targets, 2)?;
            Ok(reconstruct_file(
                &[&dl.shares[0].chunks[0], &dl.shares[1].chunks[0]],
                &scheme,
                size,
            )?)
        };
        ensure(fetch()? == data, || "download".into())?;

        let up = time(iterations, |_| upload_all(&targets, &manifest, chunks).expect("upload"));
        let down = time(iterations, |_| fetch().expect("download"));
        for (op, s) in [("synthetic-upload", up), ("synthetic-download", down)] {
            report.rows.push(
                Row {
                    machine: &machine,
                    operation: op,
                    file_size: size,
                    block_bits,
                    ratio: None,
                }
                .with(&s),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn too_few_iterations_rejected() {
        assert!(matches!(bench_block(&[256], 99), Err(BenchError::TooFewIterations(99))));
        assert!(matches!(
            bench_split(1000, 100, 10),
            Err(BenchError::TooFewIterations(10))
        ));
    }

    #[test]
    fn block_rows_are_grid_times_two() {
        assert!(bench_block(&[], 100).unwrap().rows.is_empty());
        let r = bench_block(&[256, 2048], 100).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|row| row.iterations == 100 && row.mean_us > 0.0));
    }

    #[test]
    fn file_sweep_small_grid() {
        let sweep = bench_file(
            &[10_000],
            &[256, 2048],
            &FileBenchOptions {
                iterations: 100,
                baseline_upload_us: Some(50_000.0),
            },
        )
        .unwrap();
        // per d: share + three pairs
        assert_eq!(sweep.report.rows.len(), 8);
        assert_eq!(sweep.argmin.len(), 1);
        let share = sweep.report.find("share", 10_000, 2048).unwrap();
        assert!((share.ratio.unwrap() - share.mean_us / 50_000.0).abs() < 1e-12);
        assert!(sweep.report.find("reconstruct-23", 10_000, 256).is_some());
    }

    #[test]
    fn split_and_parallel_small() {
        let r = bench_split(100_000, 1000, 100).unwrap();
        assert_eq!(
            r.rows.iter().map(|r| r.operation.as_str()).collect::<Vec<_>>(),
            ["split", "merge"]
        );
        let p = bench_parallel(64_000, 8_000, 256, 4, 100).unwrap();
        assert!(p.rows[1].ratio.unwrap() > 0.0);
    }

    #[test]
    fn transfer_small() {
        let r = bench_transfer(&[1000], 256, 100).unwrap();
        assert_eq!(r.rows.len(), 2);
    }
}
