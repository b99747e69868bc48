//! Multi-class online classification over raw samples.
//!
//! An [`OnlineClassifier`] keeps one [`ClassModel`] per label behind a
//! shared read-write lock, one training stream per label (so interleaved
//! multi-class training never contaminates transitions across labels), and
//! one test stream with per-class score states.
//!
//! The classifier can be [`split`](OnlineClassifier::split) into a
//! [`Trainer`] and a [`Scorer`] that share the model store, letting a
//! modeling actor and a classification actor run concurrently; models are
//! updated under a write lock per observation and queried under read
//! locks, so updates become visible atomically. Interleaving both halves
//! on a single thread is the reference semantics and produces identical
//! results for the same order of operations.

use std::collections::BTreeMap;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::embedding::{DdeStream, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::mgm::{compare, ClassModel, ScoreState};

/// Shared per-label model store.
pub type ModelStore = Arc<RwLock<BTreeMap<String, ClassModel>>>;

/// One class's running similarity, as reported in a [`Prediction`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub label: String,
    pub s_g: f64,
    pub log_s_m: f64,
}

/// Current classification outcome.
///
/// `label` is `None` when no class has any geographic evidence yet (every
/// similarity is negative infinity).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: Option<String>,
    pub scores: Vec<ClassScore>,
    /// Cells scored so far.
    pub t: u64,
}

impl Prediction {
    pub fn decided(&self) -> bool {
        self.label.is_some()
    }
}

/// The modeling half: feeds labeled samples into per-label streams and
/// updates the shared models.
#[derive(Debug)]
pub struct Trainer {
    config: EmbeddingConfig,
    store: ModelStore,
    streams: BTreeMap<String, DdeStream>,
}

impl Trainer {
    /// Pushes one labeled sample; the label's model is created on first
    /// sight and updated once the stream emits a cell.
    pub fn train_point(&mut self, label: &str, sample: &[f64]) -> Result<()> {
        let stream = self
            .streams
            .entry(label.to_string())
            .or_insert_with(|| DdeStream::new(self.config.clone()));
        let emission = stream.push(sample)?;
        let mut models = self.store.write();
        let model = models
            .entry(label.to_string())
            .or_insert_with(|| ClassModel::new(self.config.clone()));
        if let Some(em) = emission {
            model.observe(&em.cell, em.prev.as_ref())?;
        }
        Ok(())
    }

    /// Marks a series boundary: no transition spans two training series.
    pub fn end_series(&mut self, label: &str) {
        if let Some(stream) = self.streams.get_mut(label) {
            stream.reset();
        }
    }

    /// Trains on a whole series and closes it.
    pub fn train_series(&mut self, label: &str, series: &crate::signal::Series) -> Result<()> {
        for row in series.samples() {
            self.train_point(label, row)?;
        }
        self.end_series(label);
        Ok(())
    }

    pub fn store(&self) -> &ModelStore {
        &self.store
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }
}

/// The classification half: feeds unlabeled samples into the test stream
/// and scores emitted cells against every model in the shared store.
#[derive(Debug)]
pub struct Scorer {
    radius: usize,
    store: ModelStore,
    stream: DdeStream,
    scores: BTreeMap<String, ScoreState>,
}

impl Scorer {
    pub fn config(&self) -> &EmbeddingConfig {
        self.stream.config()
    }

    /// Pushes one sample without building a [`Prediction`]. Scores advance
    /// only when the stream emits a cell.
    pub fn ingest(&mut self, sample: &[f64]) -> Result<()> {
        let emission = self.stream.push(sample)?;
        let Some(em) = emission else {
            return Ok(());
        };
        let models = self.store.read();
        if !models.values().any(|m| !m.is_empty()) {
            return Err(Error::EmptyModel);
        }
        let t_before = self.current_t();
        // Labels trained since the last cell join as if they had scored the
        // whole trajectory with no evidence.
        for label in models.keys() {
            self.scores
                .entry(label.clone())
                .or_insert_with(|| ScoreState::no_evidence(t_before));
        }
        for (label, state) in &mut self.scores {
            match models.get(label) {
                Some(model) if !model.is_empty() => {
                    state.update(model, &em.cell, em.prev.as_ref(), self.radius)?;
                }
                _ => state.advance_with_floor(em.prev.is_some()),
            }
        }
        Ok(())
    }

    /// Pushes one sample and reports the current outcome once at least one
    /// cell has been scored.
    pub fn classify_point(&mut self, sample: &[f64]) -> Result<Option<Prediction>> {
        self.ingest(sample)?;
        Ok(self.prediction())
    }

    /// The current outcome, `None` before any cell has been scored.
    pub fn prediction(&self) -> Option<Prediction> {
        if self.current_t() == 0 {
            return None;
        }
        let scores: Vec<ClassScore> = self
            .scores
            .iter()
            .map(|(label, st)| ClassScore {
                label: label.clone(),
                s_g: st.s_g(),
                log_s_m: st.log_s_m(),
            })
            .collect();
        let pairs: Vec<(f64, f64)> = scores.iter().map(|c| (c.s_g, c.log_s_m)).collect();
        let label = compare(&pairs).map(|i| scores[i].label.clone());
        Some(Prediction {
            label,
            scores,
            t: self.current_t(),
        })
    }

    /// Re-initializes every score state and clears the test stream.
    pub fn reset(&mut self) {
        self.stream.reset();
        let models = self.store.read();
        self.scores = models.keys().map(|l| (l.clone(), ScoreState::new())).collect();
    }

    pub fn store(&self) -> &ModelStore {
        &self.store
    }

    fn current_t(&self) -> u64 {
        self.scores.values().map(ScoreState::t).max().unwrap_or(0)
    }
}

/// Per-class models plus train and classify entry points over raw samples.
#[derive(Debug)]
pub struct OnlineClassifier {
    trainer: Trainer,
    scorer: Scorer,
}

impl OnlineClassifier {
    pub fn new(config: EmbeddingConfig, radius: usize) -> Self {
        Self::from_models(config, radius, BTreeMap::new())
    }

    /// Builds a classifier around existing models (e.g. loaded from a
    /// file). Every model must share `config`.
    pub fn from_models(
        config: EmbeddingConfig,
        radius: usize,
        models: BTreeMap<String, ClassModel>,
    ) -> Self {
        let store: ModelStore = Arc::new(RwLock::new(models));
        let trainer = Trainer {
            config: config.clone(),
            store: Arc::clone(&store),
            streams: BTreeMap::new(),
        };
        let scores = store
            .read()
            .keys()
            .map(|l| (l.clone(), ScoreState::new()))
            .collect();
        let scorer = Scorer {
            radius,
            store,
            stream: DdeStream::new(config),
            scores,
        };
        Self { trainer, scorer }
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.trainer.config
    }

    pub fn radius(&self) -> usize {
        self.scorer.radius
    }

    /// Shared handle to the per-label models.
    pub fn store(&self) -> &ModelStore {
        &self.trainer.store
    }

    /// Labels with at least one observation.
    pub fn trained_labels(&self) -> Vec<String> {
        self.trainer
            .store
            .read()
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(l, _)| l.clone())
            .collect()
    }

    pub fn train_point(&mut self, label: &str, sample: &[f64]) -> Result<()> {
        self.trainer.train_point(label, sample)
    }

    pub fn end_train_series(&mut self, label: &str) {
        self.trainer.end_series(label);
    }

    pub fn train_series(&mut self, label: &str, series: &crate::signal::Series) -> Result<()> {
        self.trainer.train_series(label, series)
    }

    pub fn classify_point(&mut self, sample: &[f64]) -> Result<Option<Prediction>> {
        self.scorer.classify_point(sample)
    }

    /// Feeds a sample to the scorer without building a prediction.
    pub fn ingest_test_point(&mut self, sample: &[f64]) -> Result<()> {
        self.scorer.ingest(sample)
    }

    pub fn prediction(&self) -> Option<Prediction> {
        self.scorer.prediction()
    }

    pub fn reset_scores(&mut self) {
        self.scorer.reset();
    }

    /// Splits into the modeling and classification halves, which share the
    /// model store and may run on different threads.
    pub fn split(self) -> (Trainer, Scorer) {
        (self.trainer, self.scorer)
    }

    /// Reassembles a classifier from halves that share one store.
    pub fn join(trainer: Trainer, scorer: Scorer) -> Result<Self> {
        if !Arc::ptr_eq(&trainer.store, &scorer.store) {
            return Err(Error::Protocol(
                "trainer and scorer do not share a model store",
            ));
        }
        Ok(Self { trainer, scorer })
    }
}
