use rand::Rng;

use super::{positive, CovBlock, Latent};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::random::sample_inv_wishart_factored;

/// `Σ_c ~ InvWishart(scale, df)` with fixed hyperparameters.
#[derive(Clone, Debug)]
pub struct IwSpec {
    pub scale: SymMatrix,
    pub df: f64,
}

impl IwSpec {
    pub fn new(scale: SymMatrix, df: f64) -> Result<Self> {
        let dim = scale.dim();
        if !(df > dim as f64 + 1.0) {
            return Err(Error::DegreesOfFreedomTooSmall { df, dim });
        }
        scale.cholesky()?;
        Ok(Self { scale, df })
    }

    /// `df = J + 2` and `scale = df · diag(range²)`, so that the prior mean
    /// precision is `diag(1/range²)`.
    pub fn defaults(ranges: &[f64]) -> Result<Self> {
        let df = ranges.len() as f64 + 2.0;
        let mut diag = alloc::vec::Vec::with_capacity(ranges.len());
        for &r in ranges {
            let r = positive("range", r)?;
            diag.push(df * r * r);
        }
        Self::new(SymMatrix::from_diag(&diag), df)
    }

    pub(super) fn g0_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CovBlock> {
        let (sigma, chol) = sample_inv_wishart_factored(&self.scale, self.df, rng)?;
        Ok(CovBlock {
            sigma,
            chol,
            latent: Latent::None,
        })
    }

    /// `InvWishart(scale + W, df + n)`.
    pub(super) fn update<R: Rng + ?Sized>(&self, n: usize, scatter: &SymMatrix, rng: &mut R) -> Result<CovBlock> {
        let (sigma, chol) = sample_inv_wishart_factored(&self.scale.add(scatter), self.df + n as f64, rng)?;
        Ok(CovBlock {
            sigma,
            chol,
            latent: Latent::None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scalar_prior_mean() {
        // J=1, scale 2, df 5 is InvGamma(2.5, 1): mean 2/3
        let spec = IwSpec::new(SymMatrix::from_diag(&[2.0]), 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| spec.g0_draw(&mut rng).unwrap().sigma.get(0, 0))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 0.02 * 2.0 / 3.0, "{mean}");
    }

    #[test]
    fn scalar_conditional_mean() {
        // scale 1, df 4, one residual² of 3: InvGamma(2.5, 2), mean 4/3
        let spec = IwSpec::new(SymMatrix::from_diag(&[1.0]), 4.0).unwrap();
        let w = SymMatrix::from_diag(&[3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| spec.update(1, &w, &mut rng).unwrap().sigma.get(0, 0))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 4.0 / 3.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn rejects_small_df() {
        assert!(IwSpec::new(SymMatrix::identity(3), 4.0).is_err());
    }
}
