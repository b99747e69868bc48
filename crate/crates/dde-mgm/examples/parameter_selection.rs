//! Automatic parameter selection on a chirp: dominant frequency, delay
//! step, the false-nearest-neighbor sweep, and cell sizes.
//!
//! Run with: cargo run --example parameter_selection

use dde_mgm::params::{
    dominant_freq_index, select_cell_sizes, select_delay, select_dimension, FnnOptions,
};
use dde_mgm::Series;

fn main() {
    // A linear chirp sweeping 2 -> 4 cycles over 151 samples.
    let n = 151;
    let chirp: Vec<f64> = (0..n)
        .map(|t| {
            let u = t as f64 / n as f64;
            (std::f64::consts::TAU * (2.0 * u + 1.0 * u * u)).sin()
        })
        .collect();
    let y = Series::univariate(chirp).unwrap();

    let bin = dominant_freq_index(&y).unwrap();
    println!("N = {n}, dominant DFT bin n = {bin}");

    // Seed the delay step with d = 2: s = N / (2 * d * n).
    let s = select_delay(y.len(), 2, bin);
    println!("delay step with d=2: s = {n} / (2*2*{bin}) -> {s}");

    // Sweep the embedding dimension with false nearest neighbors.
    let (d, report) = select_dimension(&y, s, &FnnOptions::default()).unwrap();
    println!("FNN sweep at s={s} (eps={:.4}):", report.eps);
    for (i, f) in report.fractions.iter().enumerate() {
        let mark = if i + 1 == d { "  <- selected" } else { "" };
        println!("  m={}: fraction {:.3}{mark}", i + 1, f);
    }

    // One refinement pass: recompute s with the selected d.
    let s_final = select_delay(y.len(), d, bin);
    println!("refined delay step with d={d}: s = {s_final}");

    // Cell sizes come from the derivative range, about 50 bins per axis.
    let deriv = y.derivative(1).unwrap();
    let stats = deriv.stats();
    let sizes = select_cell_sizes(&deriv, 50).unwrap();
    println!(
        "derivative range [{:.4}, {:.4}] -> cell size {:.6} at 50 bins",
        stats.min[0], stats.max[0], sizes[0]
    );
}
