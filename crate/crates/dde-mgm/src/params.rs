//! Automatic selection of the delay step `s`, the embedding dimension `d`,
//! and the grid cell size.
//!
//! The delay step comes from the dominant frequency of the series:
//! `s = N / (2 * d * n)` where `n` is the index of the largest non-DC
//! magnitude bin. The embedding dimension comes from the false nearest
//! neighbor criterion: the smallest `m` for which states that are close in
//! `m` dimensions stay close in their next delayed coordinate. Cell sizes
//! split the observed derivative range into a fixed number of bins per
//! dimension.
//!
//! Because `s` depends on `d` and the FNN sweep depends on `s`, selection
//! seeds with `d = 2`, picks `s`, runs the FNN sweep for `d`, then
//! recomputes `s` once with the final `d`.

use std::collections::BTreeMap;

use rand::seq::index::sample as index_sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::embedding::delay_embed;
use crate::error::{Error, Result};
use crate::signal::Series;

/// Magnitudes at or below this are treated as a flat (constant) spectrum.
const FLAT_SPECTRUM_EPS: f64 = 1e-12;

/// Per-candidate-dimension false nearest neighbor fractions.
#[derive(Debug, Clone)]
pub struct FnnReport {
    /// `fractions[k]` is the FNN fraction at candidate dimension `k + 1`.
    pub fractions: Vec<f64>,
    /// The dimension the sweep settled on.
    pub selected: usize,
    /// Neighbor radius used.
    pub eps: f64,
    /// True when the sweep hit `m_max` without the fraction becoming
    /// negligible.
    pub saturated: bool,
}

/// Knobs for [`select_dimension`].
#[derive(Debug, Clone)]
pub struct FnnOptions {
    /// Neighbor radius; defaults to a tenth of the series' mean standard
    /// deviation when `None`.
    pub eps: Option<f64>,
    /// Distance-growth threshold above which a neighbor is false.
    pub r_th: f64,
    /// Largest tolerated false-neighbor fraction.
    pub negligible: f64,
    /// Upper bound of the dimension sweep.
    pub m_max: usize,
}

impl Default for FnnOptions {
    fn default() -> Self {
        Self {
            eps: None,
            r_th: 10.0,
            negligible: 0.01,
            m_max: 12,
        }
    }
}

/// Outcome of class-wise parameter selection.
#[derive(Debug, Clone)]
pub struct ParamSelection {
    pub s: usize,
    pub d: usize,
    /// One grid size per input dimension, from the pooled derivative range.
    pub cell_sizes: Vec<f64>,
    /// Raw per-class selections behind the averaged result.
    pub per_class: Vec<ClassSelection>,
}

/// Selections computed from one class's sampled series.
#[derive(Debug, Clone)]
pub struct ClassSelection {
    pub label: String,
    pub s_values: Vec<usize>,
    pub d_values: Vec<usize>,
}

impl ClassSelection {
    pub fn mean_s(&self) -> f64 {
        mean_usize(&self.s_values)
    }

    pub fn mean_d(&self) -> f64 {
        mean_usize(&self.d_values)
    }
}

fn mean_usize(values: &[usize]) -> f64 {
    values.iter().sum::<usize>() as f64 / values.len() as f64
}

/// Knobs for [`select_params`].
#[derive(Debug, Clone)]
pub struct SelectParamsOptions {
    /// Series drawn per class.
    pub per_class_k: usize,
    /// Grid bins per dimension for the cell-size rule.
    pub bins: usize,
    /// Derivative lag.
    pub tau: usize,
    /// FNN sweep knobs.
    pub fnn: FnnOptions,
    /// Seed for the per-class draws.
    pub seed: u64,
}

impl Default for SelectParamsOptions {
    fn default() -> Self {
        Self {
            per_class_k: 5,
            bins: 50,
            tau: 1,
            fnn: FnnOptions::default(),
            seed: 0,
        }
    }
}

/// Index of the maximum-magnitude DFT bin, excluding DC, searched over
/// bins `1..=N/2`. Multivariate series average the per-dimension magnitude
/// spectra before the argmax.
///
/// The per-dimension mean is removed before the transform, so a constant
/// series has an exactly flat spectrum and reports
/// [`Error::NoDominantFrequency`].
pub fn dominant_freq_index(series: &Series) -> Result<usize> {
    let len = series.len();
    if len < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: len,
        });
    }
    let n = series.dim();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(len);
    let mut avg_mag = vec![0.0f64; len / 2 + 1];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for k in 0..n {
        let mean = (0..len).map(|t| series.sample(t)[k]).sum::<f64>() / len as f64;
        for (t, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(series.sample(t)[k] - mean, 0.0);
        }
        fft.process(&mut buf);
        for (bin, slot) in avg_mag.iter_mut().enumerate().take(len / 2 + 1).skip(1) {
            *slot += buf[bin].norm() / n as f64;
        }
    }
    let (best_bin, best_mag) = avg_mag
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0.0), |(bi, bm), (i, &m)| {
            if m > bm {
                (i, m)
            } else {
                (bi, bm)
            }
        });
    if best_mag <= FLAT_SPECTRUM_EPS {
        return Err(Error::NoDominantFrequency);
    }
    Ok(best_bin)
}

/// Delay step from series length `n_len`, embedding dimension `d`, and
/// dominant-frequency bin `n_idx`: `max(1, floor(N / (2 * d * n)))`.
pub fn select_delay(n_len: usize, d: usize, n_idx: usize) -> usize {
    assert!(n_len >= 1 && d >= 1 && n_idx >= 1);
    (n_len / (2 * d * n_idx)).max(1)
}

/// Fraction of states at candidate dimension `m` flagged as having a false
/// nearest neighbor.
///
/// Each state with an `eps`-neighbor is tested against its nearest such
/// neighbor: `R = |future(i) - future(j)| / |state(i) - state(j)|`, where
/// `future(i)` is the sample `m * s` steps ahead. Fractions count states
/// with `R > r_th` over states that had a neighbor at all; a series whose
/// states have no `eps`-neighbors reports 0.
pub fn fnn_fraction(series: &Series, s: usize, m: usize, eps: f64, r_th: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive and finite"));
    }
    if r_th.is_nan() || r_th <= 0.0 {
        return Err(Error::invalid("r_th", "must be positive"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "candidate dimension must be at least 1"));
    }
    // Embedding at m + 1 needs the future sample y[i + m*s] for i = 0.
    if series.len() < m * s + 1 {
        return Err(Error::TooShort {
            needed: m * s + 1,
            got: series.len(),
        });
    }
    let states = delay_embed(series, s, m)?;
    // Only states whose future coordinate exists take part, as queries and
    // as neighbor candidates.
    let usable = series.len() - m * s;
    let neighbors = nearest_neighbors_within(&states[..usable], eps);

    let mut with_neighbor = 0usize;
    let mut flagged = 0usize;
    for (i, hit) in neighbors.iter().enumerate() {
        let Some(j) = *hit else { continue };
        with_neighbor += 1;
        let future_sq = dist_sq(series.sample(i + m * s), series.sample(j + m * s));
        if future_sq == 0.0 {
            continue;
        }
        let state_sq = states[i].distance_sq(&states[j]);
        // state_sq == 0 with a nonzero future means unbounded growth.
        if state_sq == 0.0 || future_sq > r_th * r_th * state_sq {
            flagged += 1;
        }
    }
    if with_neighbor == 0 {
        return Ok(0.0);
    }
    Ok(flagged as f64 / with_neighbor as f64)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For each state, the index of its nearest neighbor at Euclidean distance
/// `< eps`, ties broken by the lowest index.
///
/// States are sorted by their first coordinate; a candidate must lie within
/// `eps` on that axis, which bounds the scan to a window of the sorted
/// order instead of all pairs.
fn nearest_neighbors_within(states: &[crate::embedding::EmbeddedState], eps: f64) -> Vec<Option<usize>> {
    let n = states.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        states[a].coords()[0]
            .partial_cmp(&states[b].coords()[0])
            .unwrap()
            .then(a.cmp(&b))
    });
    let eps_sq = eps * eps;
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n];
    for (pos, &i) in order.iter().enumerate() {
        let ci = states[i].coords()[0];
        for &j in order.iter().skip(pos + 1) {
            if states[j].coords()[0] - ci >= eps {
                break;
            }
            let d2 = states[i].distance_sq(&states[j]);
            if d2 < eps_sq {
                update_best(&mut best[i], d2, j);
                update_best(&mut best[j], d2, i);
            }
        }
    }
    best.into_iter().map(|b| b.map(|(_, j)| j)).collect()
}

fn update_best(slot: &mut Option<(f64, usize)>, d2: f64, j: usize) {
    match slot {
        Some((bd, bj)) if d2 > *bd || (d2 == *bd && j >= *bj) => {}
        _ => *slot = Some((d2, j)),
    }
}

/// Smallest dimension in `1..=m_max` whose FNN fraction is negligible,
/// with the sweep's fractions. Falls back to `m_max` (flagged in the
/// report) when no candidate qualifies.
pub fn select_dimension(
    series: &Series,
    s: usize,
    opts: &FnnOptions,
) -> Result<(usize, FnnReport)> {
    if opts.m_max == 0 {
        return Err(Error::invalid("m_max", "must be at least 1"));
    }
    let eps = match opts.eps {
        Some(e) => e,
        None => series.stats().mean_std() / 10.0,
    };
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(
            "eps",
            "derived radius is not positive; series may be constant",
        ));
    }
    let mut fractions = Vec::new();
    for m in 1..=opts.m_max {
        let f = fnn_fraction(series, s, m, eps, opts.r_th)?;
        fractions.push(f);
        if f <= opts.negligible {
            return Ok((
                m,
                FnnReport {
                    fractions,
                    selected: m,
                    eps,
                    saturated: false,
                },
            ));
        }
    }
    Ok((
        opts.m_max,
        FnnReport {
            fractions,
            selected: opts.m_max,
            eps,
            saturated: true,
        },
    ))
}

/// Grid size per input dimension of a derivative series:
/// `(max - min) / bins`, or 1 for a flat dimension.
pub fn select_cell_sizes(deriv: &Series, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::invalid("bins", "must be at least 2"));
    }
    let st = deriv.stats();
    Ok(st
        .min
        .iter()
        .zip(&st.max)
        .map(|(lo, hi)| {
            if hi > lo {
                (hi - lo) / bins as f64
            } else {
                1.0
            }
        })
        .collect())
}

/// Cell sizes from the pooled derivative range of several series:
/// per dimension, `(max - min) / bins` over all derivatives, or 1 for a
/// flat dimension.
pub fn pooled_cell_sizes<'a>(
    series: impl IntoIterator<Item = &'a Series>,
    bins: usize,
    tau: usize,
) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::invalid("bins", "must be at least 2"));
    }
    let mut pool: Option<(Vec<f64>, Vec<f64>)> = None;
    for s in series {
        let st = s.derivative(tau)?.stats();
        match &mut pool {
            Some((lo, hi)) => {
                for k in 0..st.min.len() {
                    lo[k] = lo[k].min(st.min[k]);
                    hi[k] = hi[k].max(st.max[k]);
                }
            }
            None => pool = Some((st.min, st.max)),
        }
    }
    let (lo, hi) = pool.ok_or(Error::EmptyInput("series"))?;
    Ok(lo
        .iter()
        .zip(&hi)
        .map(|(lo, hi)| {
            if hi > lo {
                (hi - lo) / bins as f64
            } else {
                1.0
            }
        })
        .collect())
}

/// Runs the full selection pipeline on up to `per_class_k` randomly drawn
/// series per class and averages the per-class outcomes.
///
/// Per drawn series, on its derivative: dominant frequency, `s` seeded with
/// `d = 2`, the FNN sweep for `d`, then `s` recomputed with that `d`. The
/// final `s` and `d` are the across-class means of the per-class means,
/// rounded half up with a floor of 1. Cell sizes come from the pooled
/// derivative range of every drawn series.
pub fn select_params(
    classes: &BTreeMap<String, Vec<&Series>>,
    opts: &SelectParamsOptions,
) -> Result<ParamSelection> {
    if classes.is_empty() {
        return Err(Error::EmptyInput("classes"));
    }
    if opts.per_class_k == 0 {
        return Err(Error::invalid("per_class_k", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut per_class = Vec::new();
    let mut pool: Vec<&Series> = Vec::new();

    for (label, members) in classes {
        if members.is_empty() {
            return Err(Error::MissingData(format!("class `{label}` has no series")));
        }
        let k = opts.per_class_k.min(members.len());
        let drawn: Vec<&Series> = if k == members.len() {
            members.clone()
        } else {
            index_sample(&mut rng, members.len(), k)
                .into_iter()
                .map(|i| members[i])
                .collect()
        };

        let mut s_values = Vec::with_capacity(k);
        let mut d_values = Vec::with_capacity(k);
        for series in drawn {
            let deriv = series.derivative(opts.tau)?;
            let n_idx = dominant_freq_index(&deriv)?;
            let s_seed = select_delay(deriv.len(), 2, n_idx);
            let (d, _) = select_dimension(&deriv, s_seed, &opts.fnn)?;
            let s = select_delay(deriv.len(), d, n_idx);
            s_values.push(s);
            d_values.push(d);
            pool.push(series);
        }
        per_class.push(ClassSelection {
            label: label.clone(),
            s_values,
            d_values,
        });
    }

    let s = round_half_up_mean(per_class.iter().map(ClassSelection::mean_s));
    let d = round_half_up_mean(per_class.iter().map(ClassSelection::mean_d));
    let cell_sizes = pooled_cell_sizes(pool.iter().copied(), opts.bins, opts.tau)?;

    Ok(ParamSelection {
        s,
        d,
        cell_sizes,
        per_class,
    })
}

fn round_half_up_mean(values: impl Iterator<Item = f64>) -> usize {
    let vals: Vec<f64> = values.collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    ((mean + 0.5).floor() as usize).max(1)
}
