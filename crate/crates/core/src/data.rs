use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `n × J` observation matrix with cached column ranges and means.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    dim: usize,
    values: Vec<f64>,
    ranges: Vec<f64>,
    means: Vec<f64>,
}

impl FeatureMatrix {
    /// Wraps row-major values. Rejects empty input, non-finite cells and,
    /// when there is more than one row, constant columns (hyperparameter
    /// defaults divide by squared column ranges).
    pub fn new(n: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::EmptyData);
        }
        if values.len() != n * dim {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                column: pos % dim,
            });
        }
        let mut lo = values[..dim].to_vec();
        let mut hi = lo.clone();
        let mut sum = alloc::vec![0.0; dim];
        for row in values.chunks_exact(dim) {
            for j in 0..dim {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
                sum[j] += row[j];
            }
        }
        let ranges: Vec<f64> = hi.iter().zip(&lo).map(|(h, l)| h - l).collect();
        if n > 1 {
            if let Some(column) = ranges.iter().position(|&r| !(r > 0.0)) {
                return Err(Error::ConstantColumn { column });
            }
        }
        let means = sum.into_iter().map(|s| s / n as f64).collect();
        Ok(Self {
            n,
            dim,
            values,
            ranges,
            means,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, dim, values)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Column ranges with zero (single-row data) replaced by one, for use as
    /// hyperparameter scales.
    pub fn scales(&self) -> Vec<f64> {
        self.ranges.iter().map(|&r| if r > 0.0 { r } else { 1.0 }).collect()
    }

    /// Subset of rows in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        Self::new(rows.len(), self.dim, values)
    }
}
