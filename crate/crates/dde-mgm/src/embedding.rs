//! Delay embedding of real-valued series, grid discretization, and the
//! incremental derivative delay embedding of streams.
//!
//! The offline path ([`delay_embed`] + [`discretize`]) reconstructs states
//! from a whole series at once; [`DdeStream`] produces the identical cell
//! sequence one sample at a time from a fixed-size buffer, taking the
//! derivative first so the result is invariant to baseline shift.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::signal::Series;

/// Parameters of the discretized derivative delay embedding.
///
/// The embedded space has `D = n * d` axes: `d` delayed copies of each of
/// the `n` input dimensions. `cell_sizes` holds one grid size per axis, the
/// per-input-dimension sizes replicated across the delay copies.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    n: usize,
    s: usize,
    d: usize,
    tau: usize,
    cell_sizes: Vec<f64>,
}

impl EmbeddingConfig {
    /// Creates a config from one grid size per input dimension; the sizes
    /// are replicated across the `d` delay copies of that dimension.
    pub fn new(n: usize, s: usize, d: usize, tau: usize, per_dim_sizes: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if s == 0 {
            return Err(Error::invalid("s", "delay step must be at least 1"));
        }
        if d == 0 {
            return Err(Error::invalid("d", "embedding dimension must be at least 1"));
        }
        if tau == 0 {
            return Err(Error::invalid("tau", "derivative lag must be at least 1"));
        }
        if per_dim_sizes.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: per_dim_sizes.len(),
            });
        }
        if let Some(bad) = per_dim_sizes.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(
                "cell_sizes",
                format!("sizes must be positive and finite, got {bad}"),
            ));
        }
        let mut cell_sizes = Vec::with_capacity(n * d);
        for _ in 0..d {
            cell_sizes.extend_from_slice(per_dim_sizes);
        }
        Ok(Self {
            n,
            s,
            d,
            tau,
            cell_sizes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// Per-axis grid sizes of the embedded space, length `n * d`.
    pub fn cell_sizes(&self) -> &[f64] {
        &self.cell_sizes
    }

    /// Dimensionality of the embedded space, `D = n * d`.
    pub fn embedded_dim(&self) -> usize {
        self.n * self.d
    }

    /// Number of pushes a fresh stream consumes before the first cell:
    /// `(d - 1) * s + tau`.
    pub fn warmup(&self) -> usize {
        (self.d - 1) * self.s + self.tau
    }

    /// Raw samples the stream buffer must hold: `(d - 1) * s + 1 + tau`.
    pub fn buffer_capacity(&self) -> usize {
        self.warmup() + 1
    }
}

/// One reconstructed state: `d` delayed `n`-dimensional observations
/// concatenated into `D = n * d` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedState {
    coords: Vec<f64>,
}

impl EmbeddedState {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean distance to another state.
    pub fn distance(&self, other: &EmbeddedState) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub(crate) fn distance_sq(&self, other: &EmbeddedState) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Integer coordinates of one grid cell in the discretized embedding space.
///
/// Cells are exact-equality keys; the grid is unbounded so indices may be
/// arbitrarily large in either direction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    indices: Vec<i64>,
}

impl Cell {
    pub fn new(indices: Vec<i64>) -> Self {
        Self { indices }
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// True when every axis differs by at most `r` (Chebyshev ball test).
    pub fn within(&self, other: &Cell, r: i64) -> bool {
        self.indices
            .iter()
            .zip(&other.indices)
            .all(|(a, b)| (a - b).abs() <= r)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Delay embedding of a series: state `t` stacks samples
/// `y[t], y[t + s], ..., y[t + (d - 1) * s]`. Yields `N - (d - 1) * s`
/// states.
pub fn delay_embed(series: &Series, s: usize, d: usize) -> Result<Vec<EmbeddedState>> {
    if s == 0 {
        return Err(Error::invalid("s", "delay step must be at least 1"));
    }
    if d == 0 {
        return Err(Error::invalid("d", "embedding dimension must be at least 1"));
    }
    let span = (d - 1) * s;
    if series.len() < span + 1 {
        return Err(Error::TooShort {
            needed: span + 1,
            got: series.len(),
        });
    }
    let n = series.dim();
    let count = series.len() - span;
    let mut states = Vec::with_capacity(count);
    for t in 0..count {
        let mut coords = Vec::with_capacity(n * d);
        for j in 0..d {
            coords.extend_from_slice(series.sample(t + j * s));
        }
        states.push(EmbeddedState { coords });
    }
    Ok(states)
}

/// Maps a state to its nearest grid cell: per axis,
/// `index = round(coord / size)` with halves rounded away from zero, so
/// cell 0 is centered on the origin.
pub fn discretize(state: &EmbeddedState, cell_sizes: &[f64]) -> Cell {
    assert_eq!(
        state.coords.len(),
        cell_sizes.len(),
        "state and cell sizes must have the same dimension"
    );
    let indices = state
        .coords
        .iter()
        .zip(cell_sizes)
        .map(|(c, sz)| {
            debug_assert!(*sz > 0.0);
            // f64::round ties away from zero, matching the grid convention.
            (c / sz).round() as i64
        })
        .collect();
    Cell { indices }
}

/// A cell emitted by [`DdeStream::push`], paired with the previously
/// emitted cell so callers can record the transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub cell: Cell,
    pub prev: Option<Cell>,
}

/// Incremental derivative delay embedding over a fixed-size ring of raw
/// samples.
///
/// Nothing is emitted for the first `warmup()` pushes; afterwards every
/// push yields exactly one cell, equal to the offline
/// derivative -> delay-embed -> discretize pipeline over the same samples.
#[derive(Debug, Clone)]
pub struct DdeStream {
    config: EmbeddingConfig,
    buf: VecDeque<f64>,
    prev: Option<Cell>,
    pushed: usize,
}

impl DdeStream {
    pub fn new(config: EmbeddingConfig) -> Self {
        let cap = (config.buffer_capacity() + 1) * config.n();
        Self {
            config,
            buf: VecDeque::with_capacity(cap),
            prev: None,
            pushed: 0,
        }
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    /// Samples pushed since creation or the last reset.
    pub fn pushed(&self) -> usize {
        self.pushed
    }

    /// The most recently emitted cell, if any.
    pub fn prev_cell(&self) -> Option<&Cell> {
        self.prev.as_ref()
    }

    /// Clears the buffer and the previous-cell marker, starting a new
    /// stream segment.
    pub fn reset(&mut self) {
        self.buf.clear();
        self.prev = None;
        self.pushed = 0;
    }

    /// Feeds one raw sample. Returns the emitted cell and its predecessor
    /// once the buffer is full, `None` during warm-up.
    pub fn push(&mut self, sample: &[f64]) -> Result<Option<Emission>> {
        let n = self.config.n();
        if sample.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sample.len(),
            });
        }
        for (k, &v) in sample.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    index: self.pushed,
                    dim: k,
                });
            }
        }

        let cap_values = self.config.buffer_capacity() * n;
        self.buf.extend(sample.iter().copied());
        if self.buf.len() > cap_values {
            self.buf.drain(..n);
        }
        self.pushed += 1;
        if self.buf.len() < cap_values {
            return Ok(None);
        }

        let (s, d, tau) = (self.config.s(), self.config.d(), self.config.tau());
        let t = tau as f64;
        let mut coords = Vec::with_capacity(self.config.embedded_dim());
        for j in 0..d {
            let base = j * s * n;
            for k in 0..n {
                coords.push((self.buf[base + tau * n + k] - self.buf[base + k]) / t);
            }
        }
        let cell = discretize(&EmbeddedState { coords }, self.config.cell_sizes());
        let prev = self.prev.replace(cell.clone());
        Ok(Some(Emission { cell, prev }))
    }
}

/// Offline reference pipeline: derivative, delay embedding, then
/// discretization. Produces the same cell sequence that [`DdeStream`]
/// emits for the same samples.
pub fn dde_offline(series: &Series, config: &EmbeddingConfig) -> Result<Vec<Cell>> {
    let deriv = series.derivative(config.tau())?;
    let states = delay_embed(&deriv, config.s(), config.d())?;
    Ok(states
        .iter()
        .map(|st| discretize(st, config.cell_sizes()))
        .collect())
}
