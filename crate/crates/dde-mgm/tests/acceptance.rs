//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criterion 7 reproduces the UCI character-trajectories results and needs
//! the converted dataset on disk; it reports SKIP when the file is absent
//! (see README for how to produce it).

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dde_mgm::embedding::{dde_offline, DdeStream, EmbeddingConfig};
use dde_mgm::harness::dataset::{load_csv, Dataset, DatasetEntry};
use dde_mgm::harness::persist::{load_model_from_slice, save_model_to_vec};
use dde_mgm::harness::{bench_rate, eval_holdout, eval_online};
use dde_mgm::mgm::{ClassModel, ScoreState};
use dde_mgm::params::{
    dominant_freq_index, select_delay, select_dimension, select_params, FnnOptions,
    SelectParamsOptions,
};
use dde_mgm::{Cell, OnlineClassifier, Series};

fn pass(n: u32, name: &str) {
    println!("criterion {n} ({name}): PASS");
}

/// Random value on the 1/64 lattice; sums with the lattice shifts below
/// stay exactly representable, so baseline equality is bitwise.
fn lattice(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-128i32..=128) as f64 / 64.0
}

#[test]
fn criterion_01_baseline_shift_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..100 {
        let n = rng.gen_range(1..=3);
        let len = rng.gen_range(30..120);
        let s = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=3);
        let tau = rng.gen_range(1..=2);
        let sizes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.5)).collect();
        let config = EmbeddingConfig::new(n, s, d, tau, &sizes).unwrap();

        let rows: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..n).map(|_| lattice(&mut rng)).collect())
            .collect();
        let shift: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-6400i32..=6400) as f64 / 64.0)
            .collect();
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| row.iter().zip(&shift).map(|(v, c)| v + c).collect())
            .collect();

        let mut plain_stream = DdeStream::new(config.clone());
        let mut shifted_stream = DdeStream::new(config.clone());
        let mut plain_model = ClassModel::new(config.clone());
        let mut shifted_model = ClassModel::new(config.clone());
        for (a, b) in rows.iter().zip(&shifted) {
            let ea = plain_stream.push(a).unwrap();
            let eb = shifted_stream.push(b).unwrap();
            assert_eq!(ea, eb, "case {case}: cell sequences diverge");
            if let Some(em) = ea {
                plain_model.observe(&em.cell, em.prev.as_ref()).unwrap();
            }
            if let Some(em) = eb {
                shifted_model.observe(&em.cell, em.prev.as_ref()).unwrap();
            }
        }
        assert_eq!(plain_model, shifted_model, "case {case}: models diverge");
        assert_eq!(
            plain_model.geo_log_total(),
            shifted_model.geo_log_total(),
            "case {case}: totals diverge"
        );
    }
    pass(1, "baseline-shift invariance");
}

#[test]
fn criterion_02_streaming_offline_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..1000 {
        let n = rng.gen_range(1..=3);
        let s = rng.gen_range(1..=5);
        let d = rng.gen_range(1..=4);
        let tau = rng.gen_range(1..=2);
        let warmup = (d - 1) * s + tau;
        let len = rng.gen_range(warmup + 1..warmup + 80);
        let sizes: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let config = EmbeddingConfig::new(n, s, d, tau, &sizes).unwrap();

        let rows: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let series = Series::from_rows(&rows).unwrap();

        let offline = dde_offline(&series, &config).unwrap();
        let mut stream = DdeStream::new(config);
        let mut online = Vec::new();
        for row in series.samples() {
            if let Some(em) = stream.push(row).unwrap() {
                online.push(em.cell);
            }
        }
        assert_eq!(online, offline, "case {case}");
        assert_eq!(online.len(), len - warmup, "case {case}: output count");
    }
    pass(2, "streaming/offline equivalence");
}

fn random_model(rng: &mut impl Rng, dim: usize, observes: usize, spread: i64) -> ClassModel {
    let config = EmbeddingConfig::new(dim, 1, 1, 1, &vec![1.0; dim]).unwrap();
    let mut model = ClassModel::new(config);
    let mut prev: Option<Cell> = None;
    for _ in 0..observes {
        let cell = Cell::new(
            (0..dim)
                .map(|_| rng.gen_range(-spread..=spread))
                .collect(),
        );
        // Occasional stream break keeps some cells transition-free.
        if rng.gen_bool(0.05) {
            prev = None;
        }
        model.observe(&cell, prev.as_ref()).unwrap();
        prev = Some(cell);
    }
    model
}

#[test]
fn criterion_03_incremental_batch_score_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..1000 {
        let dim = rng.gen_range(1..=3);
        let spread = rng.gen_range(2..=4);
        let observes = rng.gen_range(20..300);
        let model = random_model(&mut rng, dim, observes, spread);
        let r = rng.gen_range(0..=2);
        let len = rng.gen_range(1..=60);
        let trajectory: Vec<Cell> = (0..len)
            .map(|_| {
                Cell::new(
                    (0..dim)
                        .map(|_| rng.gen_range(-spread - 2..=spread + 2))
                        .collect(),
                )
            })
            .collect();

        let (batch_g, batch_m) = model.batch_score(&trajectory, r).unwrap();
        let mut st = ScoreState::new();
        let mut prev: Option<&Cell> = None;
        for cell in &trajectory {
            st.update(&model, cell, prev, r).unwrap();
            prev = Some(cell);
        }
        assert!(
            (st.s_g() - batch_g).abs() <= 1e-9,
            "case {case}: s_g {} vs {batch_g}",
            st.s_g()
        );
        assert!(
            (st.log_s_m() - batch_m).abs() <= 1e-9,
            "case {case}: log_s_m {} vs {batch_m}",
            st.log_s_m()
        );
    }
    pass(3, "incremental/batch score oracle");
}

#[test]
fn criterion_04_probability_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for case in 0..50 {
        let dim = rng.gen_range(1..=3);
        let observes = rng.gen_range(50..800);
        let model = random_model(&mut rng, dim, observes, 3);

        let geo_sum: f64 = model
            .geo_counts()
            .map(|(cell, _)| model.geo_prob(cell).unwrap())
            .sum();
        assert!(
            (geo_sum - 1.0).abs() <= 1e-12,
            "case {case}: geographic sum {geo_sum}"
        );

        let mut from_cells: Vec<Cell> = Vec::new();
        let mut pairs: Vec<(Cell, Cell)> = Vec::new();
        for (from, to, _) in model.trans_counts() {
            if !from_cells.contains(from) {
                from_cells.push(from.clone());
            }
            pairs.push((from.clone(), to.clone()));
        }
        for from in &from_cells {
            let sum: f64 = pairs
                .iter()
                .filter(|(f, _)| f == from)
                .map(|(f, t)| model.trans_prob(t, f))
                .sum();
            assert!(
                (sum - 1.0).abs() <= 1e-12,
                "case {case}: transition sum {sum}"
            );
        }
        // r = 0 neighborhood degenerates to the exact transition
        // probability on every observed pair.
        for (from, to) in &pairs {
            assert_eq!(
                model.trans_prob_neighborhood(to, from, 0),
                model.trans_prob(to, from),
                "case {case}"
            );
        }
    }
    pass(4, "probability normalization and r=0 degeneracy");
}

#[test]
fn criterion_05_delay_step_worked_example() {
    // A sinusoid completing exactly 3 cycles over 151 samples puts the
    // dominant magnitude at bin 3; with d = 2 the delay-step rule gives
    // floor(151 / 12) = 12.
    let n = 151;
    let y = Series::univariate(
        (0..n)
            .map(|t| (std::f64::consts::TAU * 3.0 * t as f64 / n as f64).sin())
            .collect(),
    )
    .unwrap();
    assert_eq!(dominant_freq_index(&y).unwrap(), 3);
    assert_eq!(select_delay(n, 2, 3), 12);
    pass(5, "delay-step worked example s=12");
}

#[test]
fn criterion_06_fnn_dimension_on_chirp() {
    // Linear chirp sweeping 2 -> 4 cycles over 151 samples (increasing
    // frequency, dominant bin 3, matching the s = 12 setting).
    let n = 151;
    let chirp = Series::univariate(
        (0..n)
            .map(|t| {
                let u = t as f64 / n as f64;
                (std::f64::consts::TAU * (2.0 * u + u * u)).sin()
            })
            .collect(),
    )
    .unwrap();
    assert_eq!(dominant_freq_index(&chirp).unwrap(), 3);
    let (d, report) = select_dimension(&chirp, 12, &FnnOptions::default()).unwrap();
    assert!(
        (4..=8).contains(&d),
        "selected d={d}, fractions {:?}",
        report.fractions
    );
    assert!(
        report.fractions[d - 1] <= 0.01,
        "fraction at d={d} is {}",
        report.fractions[d - 1]
    );
    pass(6, "FNN dimension on chirp in [4, 8]");
}

fn uci_dataset() -> Option<Dataset> {
    let path = std::env::var("DDE_MGM_UCI_CSV").unwrap_or_else(|_| {
        format!(
            "{}/../../testdata/uci_character_trajectories.csv",
            env!("CARGO_MANIFEST_DIR")
        )
    });
    if !std::path::Path::new(&path).exists() {
        eprintln!(
            "criterion 7 (UCI character trajectories): SKIP — dataset not found at {path}; \
             see README for scripts/convert_uci_chartraj.py"
        );
        return None;
    }
    Some(load_csv(&path).expect("UCI CSV parses"))
}

#[test]
fn criterion_07_uci_character_trajectories() {
    let Some(dataset) = uci_dataset() else {
        return;
    };
    assert_eq!(dataset.labels().len(), 20);

    // Automatic selection lands near the reference setting.
    let sel = select_params(
        &dataset.series_by_label(),
        &SelectParamsOptions::default(),
    )
    .unwrap();
    assert!(
        (6..=10).contains(&sel.s),
        "selected s={} not within 8 +/- 2",
        sel.s
    );
    assert!(
        (3..=7).contains(&sel.d),
        "selected d={} not within 5 +/- 2",
        sel.d
    );

    // Reference setting for this dataset: s=8, d=5, 50 bins, r=1.
    let sizes = dde_mgm::params::pooled_cell_sizes(
        dataset.entries().iter().map(|e| &e.series),
        50,
        1,
    )
    .unwrap();
    let config = EmbeddingConfig::new(dataset.dim(), 8, 5, 1, &sizes).unwrap();

    let holdout = eval_holdout(&dataset, &config, 1, 0.5, 7).unwrap();
    println!(
        "UCI holdout accuracy {:.4} over {} series",
        holdout.accuracy, holdout.evaluated
    );
    assert!(
        holdout.accuracy >= 0.87,
        "holdout accuracy {:.4} below 0.87",
        holdout.accuracy
    );

    let online = eval_online(&dataset, &config, 1, 7).unwrap();
    println!(
        "UCI online accuracy {:.4} over {} series ({} excluded)",
        online.accuracy, online.evaluated, online.excluded
    );
    assert!(
        online.accuracy >= 0.90,
        "online accuracy {:.4} below 0.90",
        online.accuracy
    );
    pass(7, "UCI character trajectories reproduction");
}

#[test]
fn criterion_08_synthetic_two_class_separability() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut entries = Vec::new();
    for (label, period, amp) in [("low", 36.0, 1.0), ("high", 13.0, 0.6)] {
        for i in 0..100 {
            let len = rng.gen_range(300..=3000);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let baseline = rng.gen_range(-10.0..10.0);
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
    assert_eq!(dataset.len(), 200);

    let sel = select_params(
        &dataset.series_by_label(),
        &SelectParamsOptions::default(),
    )
    .unwrap();
    let config = EmbeddingConfig::new(1, sel.s, sel.d, 1, &sel.cell_sizes).unwrap();
    let report = eval_holdout(&dataset, &config, 1, 0.5, 2024).unwrap();
    println!(
        "synthetic separability accuracy {:.4} over {} series (s={} d={})",
        report.accuracy, report.evaluated, sel.s, sel.d
    );
    assert!(
        report.accuracy >= 0.95,
        "accuracy {:.4} below 0.95",
        report.accuracy
    );
    pass(8, "synthetic two-class separability >= 0.95");
}

#[test]
fn criterion_09_constant_memory_footprint() {
    // Noisy periodic stream; cell sizes fixed from the first 10k points'
    // derivative range (the training range).
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let total = 100_000;
    let vals: Vec<f64> = (0..total)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 50.0 + 0.13;
            t.sin() + 0.3 * (2.0 * t).cos() + 0.0005 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    let stream = Series::univariate(vals).unwrap();
    let head = stream.prefix(10_000).unwrap();
    let sizes =
        dde_mgm::params::select_cell_sizes(&head.derivative(1).unwrap(), 50).unwrap();
    let config = EmbeddingConfig::new(1, 4, 2, 1, &sizes).unwrap();

    let mut dde = DdeStream::new(config);
    let mut seen = HashSet::new();
    let mut at_10k = 0usize;
    for (i, row) in stream.samples().enumerate() {
        if let Some(em) = dde.push(row).unwrap() {
            seen.insert(em.cell);
        }
        if i + 1 == 10_000 {
            at_10k = seen.len();
        }
    }
    let growth = (seen.len() - at_10k) as f64 / at_10k as f64;
    println!(
        "distinct cells: {} at 10k -> {} at 100k (growth {:.2}%)",
        at_10k,
        seen.len(),
        growth * 100.0
    );
    assert!(at_10k > 0);
    assert!(
        growth <= 0.10,
        "distinct-cell growth {:.2}% exceeds 10%",
        growth * 100.0
    );
    pass(9, "approximately constant memory footprint");
}

#[test]
fn criterion_10_throughput_ordering() {
    // 3-D stream sharing one fundamental period, noise sized so coarse
    // grids absorb it while fine grids resolve it.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..dde_mgm::harness::BENCH_POINTS)
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
    let sweep = [20usize, 30, 40, 50, 60];

    // Medians over repeated runs damp scheduler noise.
    let mut rates: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut bytes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cells: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..3 {
        for report in bench_rate(&stream, 4, 2, 1, &sweep).unwrap() {
            rates.entry(report.bins).or_default().push(report.rate);
            bytes.insert(report.bins, report.model_bytes);
            cells.insert(report.bins, report.distinct_cells);
        }
    }
    let median = |xs: &mut Vec<f64>| {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs[xs.len() / 2]
    };
    let med: BTreeMap<usize, f64> = rates
        .iter_mut()
        .map(|(bins, xs)| (*bins, median(xs)))
        .collect();
    for bins in sweep {
        println!(
            "bins={bins}: rate {:.0} pt/s, {} cells, {} bytes",
            med[&bins], cells[&bins], bytes[&bins]
        );
    }

    assert!(
        med[&20] > med[&60],
        "rate at 20 bins ({:.0}) not above rate at 60 bins ({:.0})",
        med[&20],
        med[&60]
    );
    assert!(
        med[&50] >= 1000.0,
        "rate at 50 bins ({:.0}) below 1000 points/s",
        med[&50]
    );
    for window in sweep.windows(2) {
        assert!(
            bytes[&window[1]] > bytes[&window[0]],
            "model bytes not increasing between {} and {} bins",
            window[0],
            window[1]
        );
    }
    pass(10, "throughput ordering and memory monotonicity");
}

#[test]
fn criterion_11_model_persistence_round_trip() {
    // Build a model with 1e5 observations over a wandering noisy orbit.
    let config = EmbeddingConfig::new(2, 3, 2, 1, &[0.02, 0.03]).unwrap();
    let mut clf = OnlineClassifier::new(config.clone(), 1);
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let warmup = config.warmup();
    let total = 100_000 + warmup;
    for i in 0..total {
        let t = i as f64 * std::f64::consts::TAU / 97.0;
        let sample = [
            t.sin() + 0.05 * rng.gen_range(-1.0..1.0),
            (2.0 * t).cos() + 0.05 * rng.gen_range(-1.0..1.0),
        ];
        clf.train_point("orbit", &sample).unwrap();
    }
    {
        let store = clf.store().read();
        assert_eq!(store["orbit"].observations(), 100_000);
    }

    let bytes = save_model_to_vec(&clf).unwrap();
    let loaded = load_model_from_slice(&bytes, "round-trip").unwrap();
    let orig_store = clf.store().read();
    let loaded_store = loaded.store().read();
    let orig = &orig_store["orbit"];
    let twin = &loaded_store["orbit"];
    assert_eq!(orig, twin, "structural equality");
    assert_eq!(orig.geo_log_total(), twin.geo_log_total());

    // Identical probabilities, bit for bit, on visited and unseen queries.
    for (cell, _) in orig.geo_counts() {
        assert_eq!(orig.geo_prob(cell).unwrap(), twin.geo_prob(cell).unwrap());
    }
    let mut checked = 0;
    for (from, to, _) in orig.trans_counts() {
        assert_eq!(orig.trans_prob(to, from), twin.trans_prob(to, from));
        assert_eq!(
            orig.trans_prob_neighborhood(to, from, 1),
            twin.trans_prob_neighborhood(to, from, 1)
        );
        checked += 1;
        if checked >= 2000 {
            break;
        }
    }
    for _ in 0..500 {
        let cell = Cell::new(vec![rng.gen_range(-80..80), rng.gen_range(-80..80)]);
        let prev = Cell::new(vec![rng.gen_range(-80..80), rng.gen_range(-80..80)]);
        assert_eq!(orig.geo_prob(&cell).unwrap(), twin.geo_prob(&cell).unwrap());
        assert_eq!(
            orig.trans_prob_neighborhood(&cell, &prev, 1),
            twin.trans_prob_neighborhood(&cell, &prev, 1)
        );
    }

    // Corruption in any form fails cleanly, returning no partial model.
    let mut flipped = bytes.clone();
    let mid = flipped.len() / 3;
    flipped[mid] ^= 0x01;
    assert!(matches!(
        load_model_from_slice(&flipped, "corrupt"),
        Err(dde_mgm::Error::ModelFile { .. })
    ));
    assert!(matches!(
        load_model_from_slice(&bytes[..bytes.len() - 17], "truncated"),
        Err(dde_mgm::Error::ModelFile { .. })
    ));
    pass(11, "model persistence round trip");
}
