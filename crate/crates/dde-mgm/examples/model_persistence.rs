//! Saving and loading models: the text format round-trips counts exactly,
//! loaded models answer probability queries bit-for-bit, and corruption is
//! caught by the checksum.
//!
//! Run with: cargo run --example model_persistence

use dde_mgm::harness::persist::{load_model_from_slice, save_model_to_vec};
use dde_mgm::{Cell, EmbeddingConfig, OnlineClassifier, Series};

fn main() {
    let config = EmbeddingConfig::new(1, 2, 2, 1, &[0.1]).unwrap();
    let mut clf = OnlineClassifier::new(config, 1);
    for (label, period) in [("a", 12.0), ("b", 7.0)] {
        for phase in [0.0, 1.1] {
            let series = Series::univariate(
                (0..300)
                    .map(|i| (i as f64 * std::f64::consts::TAU / period + phase).sin())
                    .collect(),
            )
            .unwrap();
            clf.train_series(label, &series).unwrap();
        }
    }

    let bytes = save_model_to_vec(&clf).unwrap();
    println!("serialized model: {} bytes", bytes.len());
    let text = String::from_utf8(bytes.clone()).unwrap();
    println!("first lines of the file:");
    for line in text.lines().take(5) {
        println!("  {line}");
    }
    println!("  ...");
    println!("  {}", text.lines().last().unwrap());

    let loaded = load_model_from_slice(&bytes, "demo").unwrap();
    let orig = clf.store().read();
    let back = loaded.store().read();
    let mut identical = true;
    for (label, model) in orig.iter() {
        let twin = &back[label];
        identical &= model == twin;
        identical &= model.geo_log_total() == twin.geo_log_total();
        for i in -20..20i64 {
            let cell = Cell::new(vec![i, -i]);
            let prev = Cell::new(vec![i - 1, 1 - i]);
            identical &= model.geo_prob(&cell).unwrap() == twin.geo_prob(&cell).unwrap();
            identical &= model.trans_prob_neighborhood(&cell, &prev, 1)
                == twin.trans_prob_neighborhood(&cell, &prev, 1);
        }
    }
    println!("round-trip counts and probabilities identical: {identical}");

    // Any flipped byte breaks the checksum.
    let mut corrupted = bytes.clone();
    let mid = corrupted.len() / 2;
    corrupted[mid] ^= 0x20;
    match load_model_from_slice(&corrupted, "demo") {
        Err(e) => println!("corrupted copy rejected: {e}"),
        Ok(_) => println!("corrupted copy was accepted (unexpected)"),
    }

    // And a truncated file never yields a partial model.
    match load_model_from_slice(&bytes[..bytes.len() - 30], "demo") {
        Err(e) => println!("truncated copy rejected: {e}"),
        Ok(_) => println!("truncated copy was accepted (unexpected)"),
    }
}
