use std::io::Write;
use std::time::{Duration, Instant};

use serde::Serialize;

/// Fixed CSV column order.
pub const COLUMNS: [&str; 9] = [
    "machine",
    "operation",
    "file_size",
    "block_bits",
    "iterations",
    "mean_us",
    "p50_us",
    "p95_us",
    "ratio",
];

/// One measured case. `ratio` is operation specific: share time over the
/// baseline upload time for `share` rows, sequential over parallel time for
/// `share-parallel` rows, empty otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub machine: String,
    pub operation: String,
    pub file_size: usize,
    pub block_bits: u32,
    pub iterations: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn extend(&mut self, other: BenchReport) {
        self.rows.extend(other.rows);
    }

    pub fn find(&self, operation: &str, file_size: usize, block_bits: u32) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.operation == operation && r.file_size == file_size && r.block_bits == block_bits)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.machine.clone(),
                r.operation.clone(),
                r.file_size.to_string(),
                r.block_bits.to_string(),
                r.iterations.to_string(),
                format!("{:.3}", r.mean_us),
                format!("{:.3}", r.p50_us),
                format!("{:.3}", r.p95_us),
                r.ratio.map(|x| format!("{x:.5}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Summary of timing samples, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean_us: f64,
    pub p50_us: f64,
    pub p95_us: f64,
}

impl Stats {
    /// Nearest-rank percentiles.
    pub fn from_samples(samples: &[Duration]) -> Stats {
        assert!(!samples.is_empty(), "no samples");
        let mut us: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e6).collect();
        us.sort_by(f64::total_cmp);
        let rank = |q: f64| us[((q * us.len() as f64).ceil() as usize).clamp(1, us.len()) - 1];
        Stats {
            mean_us: us.iter().sum::<f64>() / us.len() as f64,
            p50_us: rank(0.50),
            p95_us: rank(0.95),
        }
    }
}

/// Runs `op` `iterations` times and returns the per-call durations. `op`
/// receives the iteration number.
pub fn time<T>(iterations: usize, mut op: impl FnMut(usize) -> T) -> Vec<Duration> {
    (0..iterations)
        .map(|i| {
            let start = Instant::now();
            std::hint::black_box(op(i));
            start.elapsed()
        })
        .collect()
}

/// OS, architecture, CPU model when known, and core count.
pub fn machine_fingerprint() -> String {
    let cpus = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let model = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().replace(',', " "))
        })
        .unwrap_or_else(|| "unknown-cpu".into());
    format!(
        "{}-{} {} x{}",
        std::env::consts::OS,
        std::env::consts::ARCH,
        model,
        cpus
    )
}
