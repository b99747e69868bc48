//! Throughput and memory benchmarking of the modeling path.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::classifier::OnlineClassifier;
use crate::embedding::{DdeStream, EmbeddingConfig};
use crate::error::{Error, Result};
use crate::harness::persist::save_model_to_vec;
use crate::mgm::ClassModel;
use crate::params::select_cell_sizes;
use crate::signal::Series;

/// Points each benchmark pass feeds into the model.
pub const BENCH_POINTS: usize = 10_000;

/// Shortest total measurement window per grid setting.
const MIN_MEASURE_SECONDS: f64 = 0.25;
const MIN_PASSES: usize = 5;

/// Modeling throughput and footprint at one grid setting.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    /// Grid bins per dimension behind the cell sizes.
    pub bins: usize,
    /// Points per pass.
    pub points: usize,
    /// Mean seconds per pass.
    pub seconds: f64,
    /// Points per second, `points / seconds`.
    pub rate: f64,
    pub distinct_cells: usize,
    /// Serialized model size, the memory estimate.
    pub model_bytes: usize,
}

/// Trains on the first [`BENCH_POINTS`] samples of `series` once per grid
/// setting in `bins_sweep`, measuring sustained points per second and the
/// resulting model footprint.
pub fn bench_rate(
    series: &Series,
    s: usize,
    d: usize,
    tau: usize,
    bins_sweep: &[usize],
) -> Result<Vec<BenchReport>> {
    if series.len() < BENCH_POINTS {
        return Err(Error::TooShort {
            needed: BENCH_POINTS,
            got: series.len(),
        });
    }
    if bins_sweep.is_empty() {
        return Err(Error::EmptyInput("bins_sweep"));
    }
    let stream = series.prefix(BENCH_POINTS)?;
    let deriv = stream.derivative(tau)?;

    let mut reports = Vec::with_capacity(bins_sweep.len());
    for &bins in bins_sweep {
        let sizes = select_cell_sizes(&deriv, bins)?;
        let config = EmbeddingConfig::new(series.dim(), s, d, tau, &sizes)?;

        // Untimed pass to settle caches and the allocator.
        let mut model = run_pass(&stream, &config)?;
        let mut passes = 0usize;
        let mut total = 0.0f64;
        while passes < MIN_PASSES || total < MIN_MEASURE_SECONDS {
            let start = Instant::now();
            model = run_pass(&stream, &config)?;
            total += start.elapsed().as_secs_f64();
            passes += 1;
        }
        let seconds = total / passes as f64;

        let distinct_cells = model.distinct_cells();
        let mut models = BTreeMap::new();
        models.insert("stream".to_string(), model);
        let holder = OnlineClassifier::from_models(config, 1, models);
        let model_bytes = save_model_to_vec(&holder)?.len();

        reports.push(BenchReport {
            bins,
            points: BENCH_POINTS,
            seconds,
            rate: BENCH_POINTS as f64 / seconds,
            distinct_cells,
            model_bytes,
        });
    }
    Ok(reports)
}

fn run_pass(stream: &Series, config: &EmbeddingConfig) -> Result<ClassModel> {
    let mut dde = DdeStream::new(config.clone());
    let mut model = ClassModel::new(config.clone());
    for row in stream.samples() {
        if let Some(em) = dde.push(row)? {
            model.observe(&em.cell, em.prev.as_ref())?;
        }
    }
    Ok(model)
}
