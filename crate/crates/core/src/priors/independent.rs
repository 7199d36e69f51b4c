use alloc::vec::Vec;

use rand::Rng;

use super::{positive, CovBlock, Latent};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::random::inv_gamma;

/// Diagonal `Σ_c` with independent `InvGamma(shape_j, scale_j)` variances.
#[derive(Clone, Debug)]
pub struct IndependentSpec {
    pub shape: Vec<f64>,
    pub scale: Vec<f64>,
}

impl IndependentSpec {
    pub fn new(shape: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if shape.len() != scale.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.len(),
                found: scale.len(),
            });
        }
        for (&a, &b) in shape.iter().zip(&scale) {
            positive("shape", a)?;
            positive("scale", b)?;
        }
        Ok(Self { shape, scale })
    }

    /// Shape 2 and scale `(range_j / 4)²`, i.e. prior mean variance
    /// `(range_j / 4)²`.
    pub fn defaults(ranges: &[f64]) -> Result<Self> {
        Self::new(
            alloc::vec![2.0; ranges.len()],
            ranges.iter().map(|r| 0.0625 * r * r).collect(),
        )
    }

    fn block(variances: Vec<f64>) -> Result<CovBlock> {
        CovBlock::new(SymMatrix::from_diag(&variances), Latent::None)
    }

    pub(super) fn g0_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CovBlock> {
        let v = self
            .shape
            .iter()
            .zip(&self.scale)
            .map(|(&a, &b)| inv_gamma(a, b, rng))
            .collect();
        Self::block(v)
    }

    /// `σ²_j ~ InvGamma(a_j + n/2, b_j + W_jj/2)`.
    pub(super) fn update<R: Rng + ?Sized>(&self, n: usize, scatter: &SymMatrix, rng: &mut R) -> Result<CovBlock> {
        let half_n = 0.5 * n as f64;
        let v = self
            .shape
            .iter()
            .zip(&self.scale)
            .enumerate()
            .map(|(j, (&a, &b))| inv_gamma(a + half_n, b + 0.5 * scatter.get(j, j), rng))
            .collect();
        Self::block(v)
    }
}
