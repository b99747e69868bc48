//! Per-class Markov geographic model.
//!
//! A model accumulates two sparse count maps over grid cells: how often
//! each cell was visited (the geographic distribution) and how often each
//! cell-to-cell transition occurred. Queries turn the counts into
//! probabilities:
//!
//! * geographic: `P(x) = log(count(x) + 1) / sum_i log(count_i + 1)` —
//!   the logarithm suppresses the large counts that pile up around the
//!   origin of derivative space;
//! * transition: observed count over the total leaving the source cell,
//!   optionally summed over Chebyshev neighborhoods of both endpoints for
//!   robustness to noise.
//!
//! Trajectory similarity combines both: a running sum of geographic
//! probabilities and a running product of transition factors, the product
//! kept in log domain so long trajectories cannot underflow.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::embedding::{Cell, EmbeddingConfig};
use crate::error::{Error, Result};

/// Smoothing floor for transition queries with no support: unseen
/// transitions and empty neighborhoods. Keeps one missing transition from
/// erasing all prior evidence of a class.
pub const TRANSITION_FLOOR: f64 = 1e-6;

/// Chebyshev windows with at most this many cells are enumerated directly;
/// larger windows fall back to scanning the sparse transition index.
const WINDOW_ENUMERATION_LIMIT: u128 = 4096;

#[derive(Debug, Clone, Default, PartialEq)]
struct Outgoing {
    total: u64,
    to: HashMap<Cell, u64>,
}

/// One class's Markov geographic model.
#[derive(Debug)]
pub struct ClassModel {
    config: EmbeddingConfig,
    geo: HashMap<Cell, u64>,
    /// Keyed lexicographically so a Chebyshev window scan can restrict to
    /// the contiguous range of sources whose first coordinate is in
    /// `[from - r, from + r]`.
    trans: BTreeMap<Cell, Outgoing>,
    /// Multiplicity of each visit-count value, kept so the log total is a
    /// pure function of the count multiset (identical across histories and
    /// across save/load).
    count_hist: BTreeMap<u64, u64>,
    /// Lazily refreshed cache of `sum_i log(count_i + 1)` as f64 bits;
    /// `log_total_dirty` marks it stale after an observation. Atomics let
    /// concurrent readers refresh it under a shared read lock.
    cached_log_total: AtomicU64,
    log_total_dirty: AtomicBool,
    observations: u64,
}

impl Clone for ClassModel {
    fn clone(&self) -> Self {
        Self {
            config: self.config.clone(),
            geo: self.geo.clone(),
            trans: self.trans.clone(),
            count_hist: self.count_hist.clone(),
            cached_log_total: AtomicU64::new(self.cached_log_total.load(Ordering::Acquire)),
            log_total_dirty: AtomicBool::new(self.log_total_dirty.load(Ordering::Acquire)),
            observations: self.observations,
        }
    }
}

impl PartialEq for ClassModel {
    /// Models compare by their exact counts and config; the log total and
    /// histogram are derived from the counts.
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.geo == other.geo && self.trans == other.trans
    }
}

impl ClassModel {
    pub fn new(config: EmbeddingConfig) -> Self {
        Self {
            config,
            geo: HashMap::new(),
            trans: BTreeMap::new(),
            count_hist: BTreeMap::new(),
            cached_log_total: AtomicU64::new(0.0f64.to_bits()),
            log_total_dirty: AtomicBool::new(false),
            observations: 0,
        }
    }

    /// Rebuilds a model from exact count maps, as read from a model file.
    ///
    /// The derived state (count histogram, log total, observation count)
    /// is a pure function of the counts, so a rebuilt model answers every
    /// probability query bit-for-bit like the model the counts came from.
    pub fn from_counts(
        config: EmbeddingConfig,
        geo_counts: Vec<(Cell, u64)>,
        trans_counts: Vec<(Cell, Cell, u64)>,
    ) -> Result<Self> {
        let dim = config.embedded_dim();
        let mut model = Self::new(config);
        for (cell, count) in geo_counts {
            if cell.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: cell.dim(),
                });
            }
            if count == 0 {
                return Err(Error::invalid("geo_counts", "counts must be positive"));
            }
            if model.geo.insert(cell, count).is_some() {
                return Err(Error::invalid("geo_counts", "duplicate cell"));
            }
            *model.count_hist.entry(count).or_insert(0) += 1;
            model.observations += count;
        }
        model
            .cached_log_total
            .store(sum_log_counts(&model.count_hist).to_bits(), Ordering::Release);
        for (from, to, count) in trans_counts {
            if from.dim() != dim || to.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: from.dim().min(to.dim()),
                });
            }
            if count == 0 {
                return Err(Error::invalid("trans_counts", "counts must be positive"));
            }
            if !model.geo.contains_key(&from) || !model.geo.contains_key(&to) {
                return Err(Error::invalid(
                    "trans_counts",
                    "transition endpoint missing from geographic counts",
                ));
            }
            let out = model.trans.entry(from).or_default();
            out.total += count;
            if out.to.insert(to, count).is_some() {
                return Err(Error::invalid("trans_counts", "duplicate transition"));
            }
        }
        Ok(model)
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    /// Total states observed.
    pub fn observations(&self) -> u64 {
        self.observations
    }

    pub fn is_empty(&self) -> bool {
        self.observations == 0
    }

    /// Number of distinct cells visited.
    pub fn distinct_cells(&self) -> usize {
        self.geo.len()
    }

    /// Number of distinct transitions recorded.
    pub fn distinct_transitions(&self) -> usize {
        self.trans.values().map(|o| o.to.len()).sum()
    }

    /// `sum_i log(count_i + 1)`, summed over the count histogram in
    /// ascending count order so the value depends only on the count
    /// multiset. Refreshed lazily after observations.
    pub fn geo_log_total(&self) -> f64 {
        if self.log_total_dirty.load(Ordering::Acquire) {
            let total = sum_log_counts(&self.count_hist);
            self.cached_log_total
                .store(total.to_bits(), Ordering::Release);
            self.log_total_dirty.store(false, Ordering::Release);
            return total;
        }
        f64::from_bits(self.cached_log_total.load(Ordering::Acquire))
    }

    /// Visit counts, for persistence and inspection.
    pub fn geo_counts(&self) -> impl Iterator<Item = (&Cell, u64)> {
        self.geo.iter().map(|(c, &n)| (c, n))
    }

    /// Transition counts, for persistence and inspection.
    pub fn trans_counts(&self) -> impl Iterator<Item = (&Cell, &Cell, u64)> {
        self.trans
            .iter()
            .flat_map(|(from, out)| out.to.iter().map(move |(to, &n)| (from, to, n)))
    }

    /// Records one state visit and, when `prev` is given, the transition
    /// `prev -> cell`.
    pub fn observe(&mut self, cell: &Cell, prev: Option<&Cell>) -> Result<()> {
        let dim = self.config.embedded_dim();
        if cell.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cell.dim(),
            });
        }
        if let Some(p) = prev {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
        }

        let count = self.geo.entry(cell.clone()).or_insert(0);
        let old = *count;
        *count += 1;
        if old > 0 {
            let slot = self.count_hist.get_mut(&old).unwrap();
            *slot -= 1;
            if *slot == 0 {
                self.count_hist.remove(&old);
            }
        }
        *self.count_hist.entry(old + 1).or_insert(0) += 1;
        *self.log_total_dirty.get_mut() = true;

        if let Some(p) = prev {
            let out = self.trans.entry(p.clone()).or_default();
            out.total += 1;
            *out.to.entry(cell.clone()).or_insert(0) += 1;
        }
        self.observations += 1;
        Ok(())
    }

    /// Geographic probability of a cell; unseen cells score 0.
    pub fn geo_prob(&self, cell: &Cell) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyModel);
        }
        let count = self.geo.get(cell).copied().unwrap_or(0);
        Ok(((count + 1) as f64).ln() / self.geo_log_total())
    }

    /// Exact transition probability `P(to | from)`: the observed count over
    /// the total leaving `from`. Returns [`TRANSITION_FLOOR`] when `from`
    /// has no outgoing transitions or the pair is unseen.
    pub fn trans_prob(&self, to: &Cell, from: &Cell) -> f64 {
        let Some(out) = self.trans.get(from) else {
            return TRANSITION_FLOOR;
        };
        let count = out.to.get(to).copied().unwrap_or(0);
        if count == 0 || out.total == 0 {
            return TRANSITION_FLOOR;
        }
        count as f64 / out.total as f64
    }

    /// Neighborhood-matched transition probability: transitions from the
    /// Chebyshev ball around `from` into the ball around `to`, over all
    /// transitions leaving the `from` ball. Returns [`TRANSITION_FLOOR`]
    /// when the window holds no support.
    ///
    /// With `r = 0` this is exactly [`ClassModel::trans_prob`].
    pub fn trans_prob_neighborhood(&self, to: &Cell, from: &Cell, r: usize) -> f64 {
        let dim = self.config.embedded_dim() as u32;
        let window = (2 * r as u128 + 1)
            .checked_pow(dim)
            .unwrap_or(u128::MAX);
        let (num, den) = if window <= WINDOW_ENUMERATION_LIMIT {
            self.window_sums_enumerated(to, from, r as i64)
        } else {
            self.window_sums_scanned(to, from, r as i64)
        };
        if den == 0 || num == 0 {
            return TRANSITION_FLOOR;
        }
        num as f64 / den as f64
    }

    /// Enumerates every cell of the Chebyshev window around `from`.
    fn window_sums_enumerated(&self, to: &Cell, from: &Cell, r: i64) -> (u64, u64) {
        let mut num = 0u64;
        let mut den = 0u64;
        let dim = from.dim();
        let mut offsets = vec![-r; dim];
        let mut indices = Vec::with_capacity(dim);
        loop {
            indices.clear();
            indices.extend(from.indices().iter().zip(&offsets).map(|(b, o)| b + o));
            let probe = Cell::new(indices.clone());
            if let Some(out) = self.trans.get(&probe) {
                den += out.total;
                for (target, &count) in &out.to {
                    if target.within(to, r) {
                        num += count;
                    }
                }
            }
            // Odometer over the window offsets.
            let mut axis = 0;
            loop {
                if axis == dim {
                    return (num, den);
                }
                offsets[axis] += 1;
                if offsets[axis] <= r {
                    break;
                }
                offsets[axis] = -r;
                axis += 1;
            }
        }
    }

    /// Scans the sparse transition index, filtering by Chebyshev distance.
    ///
    /// Lexicographic ordering bounds the scan: every source in the window
    /// has its first coordinate in `[from - r, from + r]`, a contiguous
    /// key range. A length-1 bound key sorts before (after) every real
    /// cell sharing (exceeding) that first coordinate.
    fn window_sums_scanned(&self, to: &Cell, from: &Cell, r: i64) -> (u64, u64) {
        let mut num = 0u64;
        let mut den = 0u64;
        let lo = Cell::new(vec![from.indices()[0] - r]);
        let hi = Cell::new(vec![from.indices()[0] + r + 1]);
        for (source, out) in self.trans.range(lo..hi) {
            if !source.within(from, r) {
                continue;
            }
            den += out.total;
            for (target, &count) in &out.to {
                if target.within(to, r) {
                    num += count;
                }
            }
        }
        (num, den)
    }

    /// Batch similarity of a whole trajectory: the summed geographic
    /// probabilities and the summed log transition factors.
    pub fn batch_score(&self, trajectory: &[Cell], r: usize) -> Result<(f64, f64)> {
        if trajectory.is_empty() {
            return Err(Error::EmptyInput("trajectory"));
        }
        let mut s_g = 0.0;
        let mut log_s_m = 0.0;
        for (i, cell) in trajectory.iter().enumerate() {
            s_g += self.geo_prob(cell)?;
            if i > 0 {
                log_s_m += self
                    .trans_prob_neighborhood(cell, &trajectory[i - 1], r)
                    .ln();
            }
        }
        Ok((s_g, log_s_m))
    }
}

/// Running similarity accumulators for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreState {
    s_g: f64,
    log_s_m: f64,
    t: u64,
}

impl Default for ScoreState {
    fn default() -> Self {
        Self::new()
    }
}

impl ScoreState {
    /// Fresh state: no evidence, similarity undefined.
    pub fn new() -> Self {
        Self {
            s_g: 0.0,
            log_s_m: 0.0,
            t: 0,
        }
    }

    /// A state equivalent to having scored `t` cells against a model with
    /// no matching evidence: zero geographic mass and the floor for every
    /// transition.
    pub fn no_evidence(t: u64) -> Self {
        Self {
            s_g: 0.0,
            log_s_m: if t > 1 {
                (t - 1) as f64 * TRANSITION_FLOOR.ln()
            } else {
                0.0
            },
            t,
        }
    }

    /// Running sum of geographic probabilities.
    pub fn s_g(&self) -> f64 {
        self.s_g
    }

    /// Running sum of log transition factors.
    pub fn log_s_m(&self) -> f64 {
        self.log_s_m
    }

    /// States consumed.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Folds one cell into the score.
    pub fn update(
        &mut self,
        model: &ClassModel,
        cell: &Cell,
        prev: Option<&Cell>,
        r: usize,
    ) -> Result<()> {
        if self.t > 0 && prev.is_none() {
            return Err(Error::Protocol(
                "previous cell required after the first update",
            ));
        }
        self.s_g += model.geo_prob(cell)?;
        if let Some(p) = prev {
            self.log_s_m += model.trans_prob_neighborhood(cell, p, r).ln();
        }
        self.t += 1;
        Ok(())
    }

    /// Advances past one cell with no evidence: the geographic term
    /// contributes nothing and a transition, if any, takes the floor.
    pub fn advance_with_floor(&mut self, has_prev: bool) {
        if has_prev {
            self.log_s_m += TRANSITION_FLOOR.ln();
        }
        self.t += 1;
    }

    /// Log similarity `ln(s_g) + log_s_m`; negative infinity when there is
    /// no geographic evidence at all.
    pub fn log_similarity(&self) -> f64 {
        if self.s_g > 0.0 {
            self.s_g.ln() + self.log_s_m
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn sum_log_counts(hist: &BTreeMap<u64, u64>) -> f64 {
    hist.iter()
        .map(|(&c, &mult)| mult as f64 * ((c + 1) as f64).ln())
        .sum()
}

/// Index of the best-scoring class under log-domain comparison, ties
/// broken by the lowest index. `None` when every class has no evidence.
pub fn compare(scores: &[(f64, f64)]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &(s_g, log_s_m)) in scores.iter().enumerate() {
        let key = if s_g > 0.0 {
            s_g.ln() + log_s_m
        } else {
            f64::NEG_INFINITY
        };
        if key == f64::NEG_INFINITY {
            continue;
        }
        match best {
            Some((_, bk)) if key <= bk => {}
            _ => best = Some((i, key)),
        }
    }
    best.map(|(i, _)| i)
}
