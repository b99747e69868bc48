//! Online modeling and classification of streaming time series.
//!
//! Incoming samples are differenced, delay-embedded, and snapped to a
//! sparse grid (derivative delay embedding), which makes the resulting
//! cell trajectory invariant to baseline shift and phase and keeps the
//! memory footprint approximately constant on periodic data. Each class
//! accumulates a Markov geographic model over those cells: a geographic
//! distribution of visits plus sparse transition counts. Both modeling and
//! classification are incremental, so unsegmented, unaligned streams of
//! any length can be handled point by point.
//!
//! Modules follow the pipeline:
//!
//! * [`signal`] — validated series, derivatives, descriptive statistics;
//! * [`embedding`] — delay embedding, discretization, the streaming DDE;
//! * [`params`] — automatic selection of the delay step, embedding
//!   dimension, and cell size;
//! * [`mgm`] — per-class geographic/transition models and scoring;
//! * [`classifier`] — multi-class online train/classify orchestration;
//! * [`harness`] — CSV and model files, evaluation protocols, benchmarks.
//!
//! The `examples/` directory holds one runnable walkthrough per
//! capability; the `dde-mgm` binary exposes the same machinery as a small
//! CLI.

pub mod classifier;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod mgm;
pub mod params;
pub mod signal;

pub use classifier::{ClassScore, OnlineClassifier, Prediction, Scorer, Trainer};
pub use embedding::{
    delay_embed, discretize, Cell, DdeStream, EmbeddedState, EmbeddingConfig, Emission,
};
pub use error::{Error, Result};
pub use mgm::{compare, ClassModel, ScoreState, TRANSITION_FLOOR};
pub use params::{select_params, FnnOptions, FnnReport, ParamSelection, SelectParamsOptions};
pub use signal::{Series, SeriesStats};
