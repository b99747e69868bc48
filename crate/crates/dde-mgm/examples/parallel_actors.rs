//! Modeling and classification as two concurrent actors sharing the model
//! store: the classifier reads models while the trainer keeps growing
//! them.
//!
//! Run with: cargo run --example parallel_actors

use std::sync::mpsc;
use std::thread;

use dde_mgm::{EmbeddingConfig, OnlineClassifier, Series};

fn wave(label: &str, n: usize, phase: f64) -> Series {
    let period = match label {
        "square" => {
            return Series::univariate(
                (0..n).map(|i| [0.0, 1.0, 0.0, -1.0][i % 4]).collect(),
            )
            .unwrap()
        }
        _ => 16.0,
    };
    Series::univariate(
        (0..n)
            .map(|i| 2.0 * (i as f64 * std::f64::consts::TAU / period + phase).sin())
            .collect(),
    )
    .unwrap()
}

fn main() {
    let config = EmbeddingConfig::new(1, 1, 2, 1, &[0.25]).unwrap();
    let clf = OnlineClassifier::new(config, 1);
    let (mut trainer, mut scorer) = clf.split();

    // The training actor consumes labeled series from a channel; the main
    // thread classifies a test stream concurrently. A handoff message per
    // series keeps the interleaving deterministic.
    let (task_tx, task_rx) = mpsc::channel::<(&'static str, Series)>();
    let (ack_tx, ack_rx) = mpsc::channel::<()>();
    let worker = thread::spawn(move || {
        for (label, series) in task_rx {
            trainer.train_series(label, &series).unwrap();
            if ack_tx.send(()).is_err() {
                break;
            }
        }
        trainer
    });

    // Feed initial training for both classes.
    for (label, phase) in [("square", 0.0), ("sine", 0.0), ("square", 0.5), ("sine", 0.9)] {
        task_tx.send((label, wave(label, 64, phase))).unwrap();
        ack_rx.recv().unwrap();
    }

    // Classify while the trainer keeps absorbing new series between
    // segments.
    println!("classification actor scoring a square wave:");
    let test = wave("square", 20, 0.0);
    for batch in 0..3 {
        scorer.reset();
        let mut last = None;
        for row in test.samples() {
            last = scorer.classify_point(row).unwrap();
        }
        let pred = last.unwrap();
        let models: usize = scorer.store().read().len();
        println!(
            "  segment {batch}: pred={} t={} (models in store: {models})",
            pred.label.as_deref().unwrap_or("?"),
            pred.t
        );
        // More training lands between segments.
        task_tx.send(("sine", wave("sine", 64, 0.3 * batch as f64))).unwrap();
        ack_rx.recv().unwrap();
    }

    drop(task_tx);
    let trainer = worker.join().unwrap();
    let clf = OnlineClassifier::join(trainer, scorer).unwrap();
    println!("rejoined classifier labels: {:?}", clf.trained_labels());
}
