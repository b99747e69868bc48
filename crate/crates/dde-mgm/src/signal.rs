//! Raw multivariate series: validated storage, derivatives, and the
//! descriptive statistics consumed by parameter selection.

use crate::error::{Error, Result};

/// A finite multivariate time series, stored row-major.
///
/// Non-finite values are rejected at construction, every sample has the
/// same dimension, and a series is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    data: Vec<f64>,
    dim: usize,
}

/// Per-dimension descriptive statistics of a [`Series`].
///
/// `std` follows the population convention (divide by N).
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub std: Vec<f64>,
    pub len: usize,
}

impl Series {
    /// Builds a series from per-sample rows, validating shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput("series"))?;
        let dim = first.len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim)
    }

    /// Builds a series from a flat row-major buffer of `len * dim` values.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if data.is_empty() {
            return Err(Error::EmptyInput("series"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(
                "data",
                format!("length {} is not a multiple of dim {}", data.len(), dim),
            ));
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    index: i / dim,
                    dim: i % dim,
                });
            }
        }
        Ok(Self { data, dim })
    }

    /// Builds a one-dimensional series.
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(values, 1)
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// Always false; a series is nonempty by construction.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Dimensionality of each sample.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The sample at index `t`.
    pub fn sample(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    /// Iterator over samples in time order.
    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Flat row-major view of the underlying values.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The first `len` samples as a new series.
    pub fn prefix(&self, len: usize) -> Result<Series> {
        if len == 0 || len > self.len() {
            return Err(Error::invalid(
                "len",
                format!("prefix length {} out of range 1..={}", len, self.len()),
            ));
        }
        Series::from_flat(self.data[..len * self.dim].to_vec(), self.dim)
    }

    /// First difference with lag `tau`: element `t` is
    /// `(y[t + tau] - y[t]) / tau`, componentwise. Output length is
    /// `len - tau`.
    pub fn derivative(&self, tau: usize) -> Result<Series> {
        if tau == 0 {
            return Err(Error::invalid("tau", "must be at least 1"));
        }
        if self.len() < tau + 1 {
            return Err(Error::TooShort {
                needed: tau + 1,
                got: self.len(),
            });
        }
        let n = self.dim;
        let out_len = self.len() - tau;
        let mut data = Vec::with_capacity(out_len * n);
        let t = tau as f64;
        for i in 0..out_len * n {
            data.push((self.data[i + tau * n] - self.data[i]) / t);
        }
        Ok(Series { data, dim: n })
    }

    /// Exact per-dimension min/max and population standard deviation.
    pub fn stats(&self) -> SeriesStats {
        let n = self.dim;
        let len = self.len();
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        let mut mean = vec![0.0; n];
        for row in self.samples() {
            for (k, &v) in row.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
                mean[k] += v;
            }
        }
        for m in &mut mean {
            *m /= len as f64;
        }
        let mut var = vec![0.0; n];
        for row in self.samples() {
            for (k, &v) in row.iter().enumerate() {
                let d = v - mean[k];
                var[k] += d * d;
            }
        }
        let std = var.iter().map(|v| (v / len as f64).sqrt()).collect();
        SeriesStats { min, max, std, len }
    }
}

impl SeriesStats {
    /// Mean of the per-dimension standard deviations.
    pub fn mean_std(&self) -> f64 {
        self.std.iter().sum::<f64>() / self.std.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(values: &[f64]) -> Series {
        Series::univariate(values.to_vec()).unwrap()
    }

    #[test]
    fn derivative_finite_difference() {
        let d = uni(&[1.0, 2.0, 4.0, 7.0]).derivative(1).unwrap();
        assert_eq!(d.as_flat(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let d = uni(&[5.0, 5.0, 5.0]).derivative(1).unwrap();
        assert_eq!(d.as_flat(), &[0.0, 0.0]);
    }

    #[test]
    fn derivative_cancels_baseline_shift() {
        let y = uni(&[0.25, 1.5, -0.75, 2.0, 0.5]);
        let shifted = uni(&y.as_flat().iter().map(|v| v + 3.0).collect::<Vec<_>>());
        assert_eq!(y.derivative(1).unwrap(), shifted.derivative(1).unwrap());
    }

    #[test]
    fn derivative_length_contract() {
        let y = uni(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        for tau in 1..=5 {
            assert_eq!(y.derivative(tau).unwrap().len(), y.len() - tau);
        }
        assert!(matches!(
            y.derivative(6),
            Err(Error::TooShort { needed: 7, got: 6 })
        ));
    }

    #[test]
    fn derivative_with_larger_tau() {
        let d = uni(&[0.0, 1.0, 4.0, 9.0]).derivative(2).unwrap();
        assert_eq!(d.as_flat(), &[2.0, 4.0]);
    }

    #[test]
    fn stats_min_max_len() {
        let st = uni(&[0.0, 1.0, 2.0, 3.0]).stats();
        assert_eq!(st.min, vec![0.0]);
        assert_eq!(st.max, vec![3.0]);
        assert_eq!(st.len, 4);
    }

    #[test]
    fn stats_constant_has_zero_std() {
        let st = uni(&[2.5, 2.5, 2.5]).stats();
        assert_eq!(st.std, vec![0.0]);
    }

    #[test]
    fn stats_population_convention() {
        // [0, 2]: mean 1, population variance 1.
        let st = uni(&[0.0, 2.0]).stats();
        assert_eq!(st.std, vec![1.0]);
    }

    #[test]
    fn stats_multivariate() {
        let y = Series::from_rows(&[vec![0.0, 10.0], vec![2.0, 30.0]]).unwrap();
        let st = y.stats();
        assert_eq!(st.min, vec![0.0, 10.0]);
        assert_eq!(st.max, vec![2.0, 30.0]);
        assert_eq!(st.std, vec![1.0, 10.0]);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(
            Series::univariate(vec![]),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            Series::univariate(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, dim: 0 })
        ));
        assert!(matches!(
            Series::from_rows(&[vec![1.0, 2.0], vec![3.0]]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn prefix_truncates() {
        let y = uni(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(y.prefix(2).unwrap().as_flat(), &[1.0, 2.0]);
        assert!(y.prefix(5).is_err());
        assert!(y.prefix(0).is_err());
    }
}
