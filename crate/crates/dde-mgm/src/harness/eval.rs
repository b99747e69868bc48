//! Evaluation protocols: leave-50%-out cross validation and the
//! alternating online protocol, plus the two-actor variant of the latter.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classifier::{OnlineClassifier, Prediction, Scorer, Trainer};
use crate::embedding::EmbeddingConfig;
use crate::error::{Error, Result};
use crate::harness::dataset::Dataset;
use crate::harness::persist::save_model_to_vec;
use crate::signal::Series;

/// One confusion-matrix entry; `predicted` is `None` for undecided
/// outcomes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionCount {
    pub truth: String,
    pub predicted: Option<String>,
    pub count: usize,
}

/// Outcome of one evaluation run.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub protocol: String,
    pub accuracy: f64,
    pub confusion: Vec<ConfusionCount>,
    /// Series that counted toward accuracy.
    pub evaluated: usize,
    /// Series skipped because their label had no trained model yet
    /// (online protocol only).
    pub excluded: usize,
    pub wall_seconds: f64,
    /// Serialized model size, the memory estimate.
    pub model_bytes: usize,
    /// Running accuracy after each scored series (online protocol only).
    pub curve: Option<Vec<f64>>,
}

#[derive(Default)]
struct Tally {
    confusion: BTreeMap<(String, Option<String>), usize>,
    correct: usize,
    evaluated: usize,
}

impl Tally {
    fn record(&mut self, truth: &str, predicted: Option<&str>) {
        *self
            .confusion
            .entry((truth.to_string(), predicted.map(str::to_string)))
            .or_insert(0) += 1;
        self.evaluated += 1;
        if predicted == Some(truth) {
            self.correct += 1;
        }
    }

    fn accuracy(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.correct as f64 / self.evaluated as f64
        }
    }

    fn into_confusion(self) -> Vec<ConfusionCount> {
        self.confusion
            .into_iter()
            .map(|((truth, predicted), count)| ConfusionCount {
                truth,
                predicted,
                count,
            })
            .collect()
    }
}

fn classify_series(scorer: &mut Scorer, series: &Series) -> Result<Option<Prediction>> {
    scorer.reset();
    for row in series.samples() {
        scorer.ingest(row)?;
    }
    Ok(scorer.prediction())
}

fn require_two_labels(dataset: &Dataset) -> Result<()> {
    if dataset.labels().len() < 2 {
        return Err(Error::MissingData(
            "evaluation needs at least 2 labels".to_string(),
        ));
    }
    Ok(())
}

/// Leave-`split`-out cross validation: a stratified random split by
/// `seed`, training on one part and classifying each held-out series from
/// fresh scores.
pub fn eval_holdout(
    dataset: &Dataset,
    config: &EmbeddingConfig,
    radius: usize,
    split: f64,
    seed: u64,
) -> Result<EvalReport> {
    require_two_labels(dataset)?;
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::invalid("split", "must be strictly between 0 and 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (label, mut indices) in dataset.indices_by_label() {
        if indices.len() < 2 {
            return Err(Error::MissingData(format!(
                "class `{label}` needs at least 2 series for a stratified split"
            )));
        }
        indices.shuffle(&mut rng);
        let n_train = ((indices.len() as f64 * split).round() as usize)
            .clamp(1, indices.len() - 1);
        train_idx.extend_from_slice(&indices[..n_train]);
        test_idx.extend_from_slice(&indices[n_train..]);
    }

    let start = Instant::now();
    let mut clf = OnlineClassifier::new(config.clone(), radius);
    for &i in &train_idx {
        let e = &dataset.entries()[i];
        clf.train_series(&e.label, &e.series)?;
    }
    let (trainer, mut scorer) = clf.split();
    let mut tally = Tally::default();
    for &i in &test_idx {
        let e = &dataset.entries()[i];
        let pred = classify_series(&mut scorer, &e.series)?;
        tally.record(&e.label, pred.and_then(|p| p.label).as_deref());
    }
    let wall_seconds = start.elapsed().as_secs_f64();
    let clf = OnlineClassifier::join(trainer, scorer)?;
    let model_bytes = save_model_to_vec(&clf)?.len();

    Ok(EvalReport {
        protocol: "holdout50".to_string(),
        accuracy: tally.accuracy(),
        evaluated: tally.evaluated,
        excluded: 0,
        confusion: tally.into_confusion(),
        wall_seconds,
        model_bytes,
        curve: None,
    })
}

/// Alternating online protocol: series visit in seeded random order; each
/// is classified first (counting toward accuracy only when its label
/// already has a trained model), then trained on.
pub fn eval_online(
    dataset: &Dataset,
    config: &EmbeddingConfig,
    radius: usize,
    seed: u64,
) -> Result<EvalReport> {
    eval_online_impl(dataset, config, radius, seed, false)
}

/// The online protocol with training and classification as two actors on
/// separate threads, sharing the model store. The actors run in lockstep
/// (a series is fully trained before the next is classified), so reports
/// are identical to [`eval_online`] for the same seed.
pub fn eval_online_parallel(
    dataset: &Dataset,
    config: &EmbeddingConfig,
    radius: usize,
    seed: u64,
) -> Result<EvalReport> {
    eval_online_impl(dataset, config, radius, seed, true)
}

fn eval_online_impl(
    dataset: &Dataset,
    config: &EmbeddingConfig,
    radius: usize,
    seed: u64,
    parallel: bool,
) -> Result<EvalReport> {
    require_two_labels(dataset)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let start = Instant::now();
    let clf = OnlineClassifier::new(config.clone(), radius);
    let (trainer, mut scorer) = clf.split();

    let mut tally = Tally::default();
    let mut curve = Vec::new();
    let mut excluded = 0usize;

    let mut classify_step = |scorer: &mut Scorer, idx: usize| -> Result<()> {
        let e = &dataset.entries()[idx];
        let ready = scorer
            .store()
            .read()
            .get(&e.label)
            .is_some_and(|m| !m.is_empty());
        if ready {
            let pred = classify_series(scorer, &e.series)?;
            tally.record(&e.label, pred.and_then(|p| p.label).as_deref());
            curve.push(tally.accuracy());
        } else {
            excluded += 1;
        }
        Ok(())
    };

    let trainer = if parallel {
        run_lockstep_actors(dataset, trainer, &mut scorer, &order, &mut classify_step)?
    } else {
        let mut trainer = trainer;
        for &idx in &order {
            classify_step(&mut scorer, idx)?;
            let e = &dataset.entries()[idx];
            trainer.train_series(&e.label, &e.series)?;
        }
        trainer
    };

    let wall_seconds = start.elapsed().as_secs_f64();
    let clf = OnlineClassifier::join(trainer, scorer)?;
    let model_bytes = save_model_to_vec(&clf)?.len();

    Ok(EvalReport {
        protocol: "online".to_string(),
        accuracy: tally.accuracy(),
        evaluated: tally.evaluated,
        excluded,
        confusion: tally.into_confusion(),
        wall_seconds,
        model_bytes,
        curve: Some(curve),
    })
}

/// Drives the classification actor on this thread and the training actor
/// on a second one. A handoff acknowledgment per series pins the
/// interleaving to the serialized order.
fn run_lockstep_actors(
    dataset: &Dataset,
    mut trainer: Trainer,
    scorer: &mut Scorer,
    order: &[usize],
    classify_step: &mut dyn FnMut(&mut Scorer, usize) -> Result<()>,
) -> Result<Trainer> {
    std::thread::scope(|scope| {
        let (task_tx, task_rx) = mpsc::channel::<usize>();
        let (ack_tx, ack_rx) = mpsc::channel::<()>();
        let worker = scope.spawn(move || -> Result<Trainer> {
            for idx in task_rx {
                let e = &dataset.entries()[idx];
                trainer.train_series(&e.label, &e.series)?;
                if ack_tx.send(()).is_err() {
                    break;
                }
            }
            Ok(trainer)
        });

        let mut feed = || -> Result<()> {
            for &idx in order {
                classify_step(scorer, idx)?;
                task_tx
                    .send(idx)
                    .map_err(|_| Error::Protocol("training actor exited early"))?;
                ack_rx
                    .recv()
                    .map_err(|_| Error::Protocol("training actor exited early"))?;
            }
            Ok(())
        };
        let fed = feed();
        drop(task_tx);
        let trainer = worker.join().expect("training actor panicked")?;
        fed?;
        Ok(trainer)
    })
}
