//! Two back-to-back runs of the same case should agree closely.

use xorsplit_bench::{bench_file, FileBenchOptions};

#[test]
fn consecutive_runs_agree_within_twenty_percent() {
    let opts = FileBenchOptions {
        iterations: 200,
        baseline_upload_us: Some(1.0),
    };
    let run = || {
        let sweep = bench_file(&[1_000_000], &[2048], &opts).unwrap();
        sweep.report.find("share", 1_000_000, 2048).unwrap().mean_us
    };
    // warm caches and allocator
    run();
    let (a, b) = (run(), run());
    let rel = (a - b).abs() / a.min(b);
    assert!(rel <= 0.20, "means {a:.1}us and {b:.1}us differ by {:.0}%", rel * 100.0);
}
