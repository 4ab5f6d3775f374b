//! `bench` subcommand: runs suites and writes one CSV.

use std::path::PathBuf;

use xorsplit_bench::{
    bench_block, bench_file, bench_parallel, bench_split, bench_transfer, BenchReport, FileBenchOptions,
    BLOCK_BITS_GRID, FILE_SIZES, MIN_ITERATIONS, SPLIT_CHUNK_SIZE, SPLIT_FILE_SIZE,
};

use crate::commands::Outcome;
use crate::exit::{self, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Block,
    File,
    Split,
    Transfer,
    All,
}

#[derive(Debug, Clone, clap::Args)]
pub struct BenchArgs {
    /// Which suite to run.
    #[arg(value_enum)]
    pub suite: Suite,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Timed iterations per case (at least 100).
    #[arg(long, default_value_t = MIN_ITERATIONS)]
    pub iterations: usize,
    /// Block sizes in bits, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = BLOCK_BITS_GRID)]
    pub grid: Vec<u32>,
    /// File sizes in octets for the file and transfer suites.
    #[arg(long, value_delimiter = ',', default_values_t = FILE_SIZES)]
    pub sizes: Vec<usize>,
    /// Size of the synthetic file for the split suite.
    #[arg(long, default_value_t = SPLIT_FILE_SIZE)]
    pub split_size: usize,
    /// Compare against this upload time (ms) instead of measuring one.
    #[arg(long)]
    pub baseline_upload_ms: Option<f64>,
    /// Also time sharing on a worker pool and report the speedup.
    #[arg(long)]
    pub parallel: bool,
    /// Worker threads for --parallel.
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Outcome, CliError> {
    let mut report = BenchReport::default();
    let mut notes = Vec::new();
    let run = |s: Suite| args.suite == s || args.suite == Suite::All;

    if run(Suite::Block) {
        report.extend(bench_block(&args.grid, args.iterations)?);
    }
    if run(Suite::File) {
        let sweep = bench_file(
            &args.sizes,
            &args.grid,
            &FileBenchOptions {
                iterations: args.iterations,
                baseline_upload_us: args.baseline_upload_ms.map(|ms| ms * 1000.0),
            },
        )?;
        for (size, d) in &sweep.argmin {
            notes.push(format!("fastest sharing for {size} octets: d = {d} bits"));
        }
        report.extend(sweep.report);
    }
    if run(Suite::Split) {
        report.extend(bench_split(args.split_size, SPLIT_CHUNK_SIZE, args.iterations)?);
    }
    if run(Suite::Transfer) {
        report.extend(bench_transfer(&args.sizes, 2048, args.iterations)?);
    }
    if args.parallel {
        let size = 16 * SPLIT_CHUNK_SIZE;
        let rows = bench_parallel(size, SPLIT_CHUNK_SIZE, 2048, args.threads, args.iterations)?;
        if let Some(speedup) = rows.rows.last().and_then(|r| r.ratio) {
            notes.push(format!("parallel speedup with {} threads: {speedup:.2}x", args.threads));
        }
        report.extend(rows);
    }

    let csv = report.to_csv();
    let text = match &args.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            path.display().to_string()
        }
        None => csv.trim_end().to_string(),
    };
    Ok(Outcome {
        code: exit::OK,
        text,
        json: serde_json::to_value(&report).expect("report serializes"),
        warnings: notes,
    })
}
