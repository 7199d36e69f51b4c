//! Graphical-lasso prior on the component precision `T_c`:
//! Laplace(0, 1/m₀,ij) off the diagonal, Exp(m₀,ii/2) on it, restricted to
//! positive definite matrices.
//!
//! The Laplace terms are written as normal scale mixtures with latent
//! variances `m₁,ij ~ Exp(m₀,ij²/2)`, which makes a column-wise block Gibbs
//! sampler available: each column of `T_c` is drawn jointly (off-diagonal
//! part normal, Schur complement gamma), and `1/m₁,ij` is inverse Gaussian.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::{positive, CovBlock, Latent};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::random::{gamma, sample_inv_gaussian, sample_mvn_precision};

/// Smallest `|T_ij|` used in the latent-variance update, keeping the
/// inverse Gaussian mean finite.
const MIN_ABS_OFFDIAG: f64 = 1e-300;

#[derive(Clone, Debug)]
pub struct SparseSpec {
    /// `m₀,ii` on the diagonal, `m₀,ij` off it.
    pub m0: SymMatrix,
    /// Block Gibbs sweeps on the prior used to draw a fresh component.
    pub warm_sweeps: usize,
    /// Prior-only sweeps applied to an existing empty component.
    pub refresh_sweeps: usize,
}

impl SparseSpec {
    pub fn new(m0: SymMatrix) -> Result<Self> {
        for i in 0..m0.dim() {
            for j in 0..=i {
                positive("m0", m0.get(i, j))?;
            }
        }
        Ok(Self {
            m0,
            warm_sweeps: 50,
            refresh_sweeps: 5,
        })
    }

    pub fn uniform(dim: usize, diag: f64, offdiag: f64) -> Result<Self> {
        Self::new(SymMatrix::from_lower_fn(
            dim,
            |i, j| if i == j { diag } else { offdiag },
        ))
    }

    /// `m₀,ii = 10`, `m₀,ij = 30`.
    pub fn defaults(dim: usize) -> Result<Self> {
        Self::uniform(dim, 10.0, 30.0)
    }

    fn dim(&self) -> usize {
        self.m0.dim()
    }

    /// Starting point for prior sweeps: `T` and `M₁` at their unconstrained
    /// prior means.
    fn seed(&self) -> (SymMatrix, SymMatrix) {
        let m0 = &self.m0;
        let n = self.dim();
        let t = SymMatrix::from_lower_fn(n, |i, j| if i == j { 2.0 / m0.get(i, i) } else { 0.0 });
        let m1 = SymMatrix::from_lower_fn(n, |i, j| if i == j { 0.0 } else { 2.0 / m0.get(i, j).powi(2) });
        (t, m1)
    }

    fn finish(precision: SymMatrix, m1: SymMatrix) -> Result<CovBlock> {
        let sigma = precision.cholesky()?.inverse();
        CovBlock::new(sigma, Latent::Sparse { precision, m1 })
    }

    pub(super) fn g0_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CovBlock> {
        let (mut t, mut m1) = self.seed();
        let mut sigma = t.cholesky()?.inverse();
        for _ in 0..self.warm_sweeps {
            self.sweep(&mut t, &mut sigma, &mut m1, 0, None, rng)?;
        }
        Self::finish(t, m1)
    }

    /// Prior-only sweeps continuing from an existing block.
    pub fn refresh<R: Rng + ?Sized>(&self, block: &CovBlock, rng: &mut R) -> Result<CovBlock> {
        let (mut t, mut m1) = match &block.latent {
            Latent::Sparse { precision, m1 } => (precision.clone(), m1.clone()),
            _ => return self.g0_draw(rng),
        };
        let mut sigma = block.sigma.clone();
        for _ in 0..self.refresh_sweeps {
            self.sweep(&mut t, &mut sigma, &mut m1, 0, None, rng)?;
        }
        Self::finish(t, m1)
    }

    pub(super) fn update<R: Rng + ?Sized>(
        &self,
        block: &CovBlock,
        n: usize,
        scatter: &SymMatrix,
        rng: &mut R,
    ) -> Result<CovBlock> {
        let (mut t, mut m1) = match &block.latent {
            Latent::Sparse { precision, m1 } => (precision.clone(), m1.clone()),
            other => panic!("sparse prior given latent {other:?}"),
        };
        let mut sigma = block.sigma.clone();
        self.sweep(&mut t, &mut sigma, &mut m1, n, Some(scatter), rng)?;
        Self::finish(t, m1)
    }

    /// One block Gibbs sweep over the columns of `t` followed by the latent
    /// variances. `sigma` must hold `t⁻¹` on entry and is kept in step by
    /// rank-one updates.
    fn sweep<R: Rng + ?Sized>(
        &self,
        t: &mut SymMatrix,
        sigma: &mut SymMatrix,
        m1: &mut SymMatrix,
        n: usize,
        scatter: Option<&SymMatrix>,
        rng: &mut R,
    ) -> Result<()> {
        let dim = self.dim();
        let p = dim - 1;
        let s_at = |i: usize, j: usize| scatter.map_or(0.0, |s| s.get(i, j));
        let mut others = Vec::with_capacity(p);
        for j in 0..dim {
            others.clear();
            others.extend((0..dim).filter(|&k| k != j));
            let lambda = self.m0.get(j, j);
            let rate = 0.5 * (s_at(j, j) + lambda);
            let g = gamma(0.5 * n as f64 + 1.0, rate, rng);
            if p == 0 {
                t.set(0, 0, g);
                sigma.set(0, 0, 1.0 / g);
                continue;
            }

            // Ω₁₁⁻¹ = Σ₁₁ − σ₁₂σ₁₂ᵀ/σ₂₂
            let s22 = sigma.get(j, j);
            let omega11_inv = SymMatrix::from_lower_fn(p, |a, b| {
                let (ia, ib) = (others[a], others[b]);
                sigma.get(ia, ib) - sigma.get(ia, j) * sigma.get(ib, j) / s22
            });
            let mut precision = omega11_inv.scaled(2.0 * rate);
            for (a, &ia) in others.iter().enumerate() {
                precision.add_to(a, a, 1.0 / m1.get(ia, j));
            }
            let linear: Vec<f64> = others.iter().map(|&ia| -s_at(ia, j)).collect();
            let beta = sample_mvn_precision(&precision, &linear, rng)?;

            let w = omega11_inv.mul_vec(&beta);
            let quad: f64 = w.iter().zip(&beta).map(|(a, b)| a * b).sum();
            for (a, &ia) in others.iter().enumerate() {
                t.set(ia, j, beta[a]);
            }
            t.set(j, j, g + quad);

            for a in 0..p {
                for b in 0..=a {
                    sigma.set(others[a], others[b], omega11_inv.get(a, b) + w[a] * w[b] / g);
                }
                sigma.set(others[a], j, -w[a] / g);
            }
            sigma.set(j, j, 1.0 / g);
        }

        for i in 0..dim {
            for j in 0..i {
                let m0 = self.m0.get(i, j);
                let mean = m0 / t.get(i, j).abs().max(MIN_ABS_OFFDIAG);
                let inv = sample_inv_gaussian(mean, m0 * m0, rng);
                m1.set(i, j, 1.0 / inv);
            }
        }
        if !t.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(())
    }
}

/// Unnormalized log density of the joint Laplace/exponential prior at the
/// precision `t` (`−∞` off the positive definite cone).
pub fn sparse_log_kernel(t: &SymMatrix, m0: &SymMatrix) -> f64 {
    if !t.is_positive_definite() {
        return f64::NEG_INFINITY;
    }
    let mut acc = 0.0;
    for i in 0..t.dim() {
        let rate = 0.5 * m0.get(i, i);
        acc += rate.ln() - rate * t.get(i, i);
        for j in 0..i {
            let m = m0.get(i, j);
            acc += (0.5 * m).ln() - m * t.get(i, j).abs();
        }
    }
    acc
}
