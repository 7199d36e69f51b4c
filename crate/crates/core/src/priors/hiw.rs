//! Hierarchical inverse Wishart priors.
//!
//! HIW1 puts a Wishart hyperprior on the IW scale `R₀` and an inverse gamma
//! on `κ₀ − J`. HIW2 uses the diagonal scale `2ε₀ diag(1/δ)` with
//! `df = ε₀ + J − 1`, inverse gamma hyperpriors on each `δ_j` and on
//! `ε₀ − 1`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::{positive, CovBlock, Latent, SharedHyper};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::random::{inv_gamma, inv_gamma_logpdf, ln_mv_gamma, sample_inv_wishart_factored, sample_wishart};
use crate::tuning::Tuning;

fn iw_block<R: Rng + ?Sized>(scale: &SymMatrix, df: f64, rng: &mut R) -> Result<CovBlock> {
    let (sigma, chol) = sample_inv_wishart_factored(scale, df, rng)?;
    Ok(CovBlock {
        sigma,
        chol,
        latent: Latent::None,
    })
}

/// Parts of `Σ_c log IW(Σ_c | Ψ, ν)` that vary with `ν` (and a scaled `Ψ`),
/// collected once per update.
pub(super) struct IwSums {
    pub(super) count: f64,
    pub(super) log_det_sum: f64,
}

impl IwSums {
    pub(super) fn new(blocks: &[&CovBlock]) -> Self {
        Self {
            count: blocks.len() as f64,
            log_det_sum: blocks.iter().map(|b| b.chol.log_det()).sum(),
        }
    }

    /// `Σ_c log IW(Σ_c | Ψ, ν)` given `log|Ψ|` and `Σ_c tr(Ψ Σ_c⁻¹)`.
    pub(super) fn log_lik(&self, dim: usize, df: f64, scale_log_det: f64, trace_sum: f64) -> f64 {
        let j = dim as f64;
        self.count * (0.5 * df * scale_log_det - 0.5 * df * j * core::f64::consts::LN_2 - ln_mv_gamma(dim, 0.5 * df))
            - 0.5 * (df + j + 1.0) * self.log_det_sum
            - 0.5 * trace_sum
    }
}

#[derive(Clone, Debug)]
pub struct Hiw1Spec {
    pub r1: SymMatrix,
    r1_inv: SymMatrix,
    pub kappa1: f64,
    pub alpha_kappa0: f64,
    pub beta_kappa0: f64,
}

impl Hiw1Spec {
    pub fn new(r1: SymMatrix, kappa1: f64, alpha_kappa0: f64, beta_kappa0: f64) -> Result<Self> {
        let dim = r1.dim();
        if !(kappa1 > dim as f64 - 1.0) {
            return Err(Error::DegreesOfFreedomTooSmall { df: kappa1, dim });
        }
        let r1_inv = r1.inverse()?;
        Ok(Self {
            r1,
            r1_inv,
            kappa1,
            alpha_kappa0: positive("alpha_kappa0", alpha_kappa0)?,
            beta_kappa0: positive("beta_kappa0", beta_kappa0)?,
        })
    }

    /// `R₁ = I`, `κ₁ = J + 2`, `κ₀ − J ~ InvGamma(1/2, J/2)`.
    pub fn defaults(dim: usize) -> Result<Self> {
        let j = dim as f64;
        Self::new(SymMatrix::identity(dim), j + 2.0, 0.5, 0.5 * j)
    }

    fn dim(&self) -> usize {
        self.r1.dim()
    }

    pub(super) fn initial_shared(&self) -> SharedHyper {
        SharedHyper::Hiw1 {
            r0: self.r1_inv.scaled(self.kappa1),
            kappa0: self.dim() as f64 + self.beta_kappa0 / (self.alpha_kappa0 + 1.0),
        }
    }

    pub(super) fn draw_shared<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SharedHyper> {
        Ok(SharedHyper::Hiw1 {
            r0: sample_wishart(&self.r1_inv, self.kappa1, rng)?,
            kappa0: self.dim() as f64 + inv_gamma(self.alpha_kappa0, self.beta_kappa0, rng),
        })
    }

    fn unpack<'a>(&self, shared: &'a SharedHyper) -> (&'a SymMatrix, f64) {
        match shared {
            SharedHyper::Hiw1 { r0, kappa0 } => (r0, *kappa0),
            other => panic!("HIW1 prior given shared state {other:?}"),
        }
    }

    pub(super) fn g0_draw<R: Rng + ?Sized>(&self, shared: &SharedHyper, rng: &mut R) -> Result<CovBlock> {
        let (r0, kappa0) = self.unpack(shared);
        iw_block(r0, kappa0, rng)
    }

    pub(super) fn update<R: Rng + ?Sized>(
        &self,
        n: usize,
        scatter: &SymMatrix,
        shared: &SharedHyper,
        rng: &mut R,
    ) -> Result<CovBlock> {
        let (r0, kappa0) = self.unpack(shared);
        iw_block(&r0.add(scatter), kappa0 + n as f64, rng)
    }

    /// `R₀ ~ Wishart((R₁ + Σ_c Σ_c⁻¹)⁻¹, κ₁ + |A| κ₀)`.
    pub fn draw_r0<R: Rng + ?Sized>(&self, blocks: &[&CovBlock], kappa0: f64, rng: &mut R) -> Result<SymMatrix> {
        let mut precision = self.r1.clone();
        for b in blocks {
            precision.add_assign(&b.precision());
        }
        sample_wishart(&precision.inverse()?, self.kappa1 + blocks.len() as f64 * kappa0, rng)
    }

    pub(super) fn update_shared<R: Rng + ?Sized>(
        &self,
        shared: &mut SharedHyper,
        blocks: &[&CovBlock],
        tuning: &mut Tuning,
        rng: &mut R,
    ) -> Result<()> {
        let (_, kappa0) = self.unpack(shared);
        let r0 = self.draw_r0(blocks, kappa0, rng)?;

        let dim = self.dim();
        let j = dim as f64;
        let sums = IwSums::new(blocks);
        let r0_log_det = r0.cholesky()?.log_det();
        let trace_sum: f64 = blocks.iter().map(|b| b.precision().trace_product(&r0)).sum();
        let (alpha, beta) = (self.alpha_kappa0, self.beta_kappa0);
        // target on η = log(κ₀ − J), Jacobian included
        let log_target = |eta: f64| {
            let x = eta.exp();
            if !(x > 0.0) || !x.is_finite() {
                return f64::NEG_INFINITY;
            }
            inv_gamma_logpdf(x, alpha, beta) + eta + sums.log_lik(dim, j + x, r0_log_det, trace_sum)
        };
        let eta = (kappa0 - j).ln();
        let current = log_target(eta);
        let adapt = tuning.adapting;
        let (eta, _) = tuning.hyper.step_mh(eta, log_target, current, adapt, rng);
        *shared = SharedHyper::Hiw1 {
            r0,
            kappa0: j + eta.exp(),
        };
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Hiw2Spec {
    pub g: Vec<f64>,
    pub alpha_delta: f64,
    pub alpha_eps0: f64,
    pub beta_eps0: f64,
}

impl Hiw2Spec {
    pub fn new(g: Vec<f64>, alpha_delta: f64, alpha_eps0: f64, beta_eps0: f64) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::EmptyData);
        }
        for &gj in &g {
            positive("g", gj)?;
        }
        Ok(Self {
            g,
            alpha_delta: positive("alpha_delta", alpha_delta)?,
            alpha_eps0: positive("alpha_eps0", alpha_eps0)?,
            beta_eps0: positive("beta_eps0", beta_eps0)?,
        })
    }

    /// `g_j = 20 J / range_j²`, `α_δ = 0.2`, `ε₀ − 1 ~ InvGamma(0.5, J/2)`.
    pub fn defaults(ranges: &[f64]) -> Result<Self> {
        let j = ranges.len() as f64;
        let g = ranges.iter().map(|r| 20.0 * j / (r * r)).collect();
        Self::new(g, 0.2, 0.5, 0.5 * j)
    }

    fn dim(&self) -> usize {
        self.g.len()
    }

    pub(super) fn initial_shared(&self) -> SharedHyper {
        SharedHyper::Hiw2 {
            delta: self.g.iter().map(|g| g / (self.alpha_delta + 1.0)).collect(),
            eps0: 1.0 + self.beta_eps0 / (self.alpha_eps0 + 1.0),
        }
    }

    pub(super) fn draw_shared<R: Rng + ?Sized>(&self, rng: &mut R) -> SharedHyper {
        SharedHyper::Hiw2 {
            delta: self.g.iter().map(|&g| inv_gamma(self.alpha_delta, g, rng)).collect(),
            eps0: 1.0 + inv_gamma(self.alpha_eps0, self.beta_eps0, rng),
        }
    }

    fn unpack<'a>(&self, shared: &'a SharedHyper) -> (&'a [f64], f64) {
        match shared {
            SharedHyper::Hiw2 { delta, eps0 } => (delta, *eps0),
            other => panic!("HIW2 prior given shared state {other:?}"),
        }
    }

    /// IW scale `2ε₀ diag(1/δ)` and degrees of freedom `ε₀ + J − 1`.
    pub fn iw_parameters(&self, delta: &[f64], eps0: f64) -> (SymMatrix, f64) {
        let diag: Vec<f64> = delta.iter().map(|d| 2.0 * eps0 / d).collect();
        (SymMatrix::from_diag(&diag), eps0 + self.dim() as f64 - 1.0)
    }

    pub(super) fn g0_draw<R: Rng + ?Sized>(&self, shared: &SharedHyper, rng: &mut R) -> Result<CovBlock> {
        let (delta, eps0) = self.unpack(shared);
        let (scale, df) = self.iw_parameters(delta, eps0);
        iw_block(&scale, df, rng)
    }

    pub(super) fn update<R: Rng + ?Sized>(
        &self,
        n: usize,
        scatter: &SymMatrix,
        shared: &SharedHyper,
        rng: &mut R,
    ) -> Result<CovBlock> {
        let (delta, eps0) = self.unpack(shared);
        let (scale, df) = self.iw_parameters(delta, eps0);
        iw_block(&scale.add(scatter), df + n as f64, rng)
    }

    /// `δ_j ~ InvGamma(α_δ + |A| ν/2, g_j + ε₀ Σ_c (Σ_c⁻¹)_jj)`.
    pub fn draw_delta<R: Rng + ?Sized>(
        &self,
        precision_diag_sums: &[f64],
        count: usize,
        eps0: f64,
        rng: &mut R,
    ) -> Vec<f64> {
        let df = eps0 + self.dim() as f64 - 1.0;
        let shape = self.alpha_delta + 0.5 * count as f64 * df;
        self.g
            .iter()
            .zip(precision_diag_sums)
            .map(|(&g, &p)| inv_gamma(shape, g + eps0 * p, rng))
            .collect()
    }

    pub(super) fn update_shared<R: Rng + ?Sized>(
        &self,
        shared: &mut SharedHyper,
        blocks: &[&CovBlock],
        tuning: &mut Tuning,
        rng: &mut R,
    ) -> Result<()> {
        let (_, eps0) = self.unpack(shared);
        let dim = self.dim();
        let j = dim as f64;
        let mut p_diag = alloc::vec![0.0; dim];
        for b in blocks {
            for (acc, p) in p_diag.iter_mut().zip(b.precision().diag()) {
                *acc += p;
            }
        }
        let delta = self.draw_delta(&p_diag, blocks.len(), eps0, rng);

        let sums = IwSums::new(blocks);
        let log_delta_sum: f64 = delta.iter().map(|d| d.ln()).sum();
        let weighted: f64 = p_diag.iter().zip(&delta).map(|(p, d)| p / d).sum();
        let (alpha, beta) = (self.alpha_eps0, self.beta_eps0);
        let log_target = |eta: f64| {
            let x = eta.exp();
            if !(x > 0.0) || !x.is_finite() {
                return f64::NEG_INFINITY;
            }
            let eps = 1.0 + x;
            let scale_log_det = j * (2.0 * eps).ln() - log_delta_sum;
            inv_gamma_logpdf(x, alpha, beta)
                + eta
                + sums.log_lik(dim, eps + j - 1.0, scale_log_det, 2.0 * eps * weighted)
        };
        let eta = (eps0 - 1.0).ln();
        let current = log_target(eta);
        let adapt = tuning.adapting;
        let (eta, _) = tuning.hyper.step_mh(eta, log_target, current, adapt, rng);
        *shared = SharedHyper::Hiw2 {
            delta,
            eps0: 1.0 + eta.exp(),
        };
        Ok(())
    }
}
