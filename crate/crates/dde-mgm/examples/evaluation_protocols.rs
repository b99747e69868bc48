//! The two evaluation protocols on a synthetic dataset: leave-50%-out
//! cross validation and the alternating online protocol.
//!
//! Run with: cargo run --example evaluation_protocols

use dde_mgm::harness::dataset::{Dataset, DatasetEntry};
use dde_mgm::harness::{eval_holdout, eval_online};
use dde_mgm::params::{select_params, SelectParamsOptions};
use dde_mgm::{EmbeddingConfig, Series};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    // Three classes of noisy periodic signals with unaligned phases,
    // random lengths, and random baselines.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut entries = Vec::new();
    for (label, period, amp) in [("walk", 40.0, 1.0), ("run", 17.0, 1.4), ("jump", 9.0, 0.7)] {
        for i in 0..12 {
            let len = rng.gen_range(250..600);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let baseline = rng.gen_range(-4.0..4.0);
            let vals: Vec<f64> = (0..len)
                .map(|t| {
                    baseline
                        + amp * (t as f64 * std::f64::consts::TAU / period + phase).sin()
                        + 0.05 * rng.gen_range(-1.0..1.0)
                })
                .collect();
            entries.push(DatasetEntry {
                series_id: format!("{label}-{i}"),
                label: label.to_string(),
                series: Series::univariate(vals).unwrap(),
            });
        }
    }
    let dataset = Dataset::new(entries).unwrap();
    println!(
        "dataset: {} series, {} classes",
        dataset.len(),
        dataset.labels().len()
    );

    // Parameters selected automatically from a few series per class.
    let sel = select_params(&dataset.series_by_label(), &SelectParamsOptions::default()).unwrap();
    println!("selected s={} d={} cell={:.5}", sel.s, sel.d, sel.cell_sizes[0]);
    let config = EmbeddingConfig::new(1, sel.s, sel.d, 1, &sel.cell_sizes).unwrap();

    let holdout = eval_holdout(&dataset, &config, 1, 0.5, 7).unwrap();
    println!(
        "\nholdout50: accuracy {:.3} over {} held-out series ({:.2}s, model {} bytes)",
        holdout.accuracy, holdout.evaluated, holdout.wall_seconds, holdout.model_bytes
    );
    for c in &holdout.confusion {
        println!(
            "  truth={} pred={} count={}",
            c.truth,
            c.predicted.as_deref().unwrap_or("?"),
            c.count
        );
    }

    let online = eval_online(&dataset, &config, 1, 7).unwrap();
    println!(
        "\nonline: accuracy {:.3} over {} series ({} excluded, never-seen labels)",
        online.accuracy, online.evaluated, online.excluded
    );
    let curve = online.curve.unwrap();
    let marks: Vec<String> = curve
        .iter()
        .step_by(curve.len().div_ceil(8).max(1))
        .map(|a| format!("{a:.2}"))
        .collect();
    println!("accuracy-vs-samples curve: {}", marks.join(" -> "));
}
