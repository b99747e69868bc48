//! Online train-and-classify on two signal classes: the prediction firms
//! up as evidence accumulates, and replaying the stream reproduces it.
//!
//! Run with: cargo run --example online_classification

use dde_mgm::{EmbeddingConfig, OnlineClassifier, Series};

fn square_wave(n: usize, shift: f64) -> Series {
    Series::univariate((0..n).map(|i| [0.0, 1.0, 0.0, -1.0][i % 4] + shift).collect()).unwrap()
}

fn sine_wave(n: usize, shift: f64) -> Series {
    Series::univariate(
        (0..n)
            .map(|i| 2.0 * (i as f64 * std::f64::consts::TAU / 16.0).sin() + shift)
            .collect(),
    )
    .unwrap()
}

fn main() {
    let config = EmbeddingConfig::new(1, 1, 2, 1, &[0.25]).unwrap();
    let mut clf = OnlineClassifier::new(config.clone(), 1);

    // Train each class from a few series at different baselines; the
    // derivative makes the models identical across shifts.
    for shift in [0.0, 5.0, -3.0] {
        clf.train_series("square", &square_wave(64, shift)).unwrap();
        clf.train_series("sine", &sine_wave(64, shift)).unwrap();
    }
    println!("trained labels: {:?}", clf.trained_labels());

    // Stream a square wave the models never saw (new baseline, new phase).
    println!("\nstreaming a shifted square wave:");
    let test = square_wave(24, 7.25);
    let mut last = None;
    for (i, row) in test.samples().enumerate() {
        let pred = clf.classify_point(row).unwrap();
        match &pred {
            None => println!("  point {i:2}: warming up"),
            Some(p) => {
                if i % 4 == 0 || i == test.len() - 1 {
                    let scores: Vec<String> = p
                        .scores
                        .iter()
                        .map(|c| format!("{}: s_g={:.3} log_s_m={:.2}", c.label, c.s_g, c.log_s_m))
                        .collect();
                    println!(
                        "  point {i:2}: pred={} t={} [{}]",
                        p.label.as_deref().unwrap_or("?"),
                        p.t,
                        scores.join("; ")
                    );
                }
            }
        }
        last = pred;
    }
    let final_label = last.and_then(|p| p.label).unwrap();
    println!("final prediction: {final_label}");

    // Reset and replay: the outcome is deterministic.
    clf.reset_scores();
    let mut replay = None;
    for row in test.samples() {
        replay = clf.classify_point(row).unwrap();
    }
    println!(
        "replay after reset gives the same label: {}",
        replay.and_then(|p| p.label).as_deref() == Some(final_label.as_str())
    );
}
