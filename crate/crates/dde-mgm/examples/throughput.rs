//! Modeling throughput across grid sizes: finer grids store more cells
//! and transitions, trading speed and memory for fidelity.
//!
//! Run with: cargo run --release --example throughput

use dde_mgm::harness::bench_rate;
use dde_mgm::Series;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    // A 3-D stream sharing one fundamental period, lightly noisy, long
    // enough for the 10k-point benchmark protocol.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..12_000)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 50.0;
            vec![
                t.sin() + 0.004 * rng.gen_range(-1.0..1.0),
                0.8 * (2.0 * t).cos() + 0.004 * rng.gen_range(-1.0..1.0),
                0.5 * (5.0 * t).sin() + 0.004 * rng.gen_range(-1.0..1.0),
            ]
        })
        .collect();
    let stream = Series::from_rows(&rows).unwrap();

    println!("benchmarking 10k-point modeling passes (s=4, d=2):\n");
    println!("{:>5} {:>12} {:>10} {:>12} {:>12}", "bins", "rate (pt/s)", "cells", "bytes", "ms/pass");
    let reports = bench_rate(&stream, 4, 2, 1, &[20, 30, 40, 50, 60]).unwrap();
    for r in &reports {
        println!(
            "{:>5} {:>12.0} {:>10} {:>12} {:>12.2}",
            r.bins,
            r.rate,
            r.distinct_cells,
            r.model_bytes,
            r.seconds * 1e3
        );
    }
    let first = &reports[0];
    let last = &reports[reports.len() - 1];
    println!(
        "\ncoarse vs fine grid: {:.1}x the cells, {:.2}x the rate",
        last.distinct_cells as f64 / first.distinct_cells as f64,
        first.rate / last.rate
    );
}
