//! Separation prior `Σ_c = S_c R_c S_c`.
//!
//! `R_c ~ InvWishart(R_R⁻¹, κ_R)` is conditionally conjugate given `S_c`
//! (the rows rescaled by `S_c⁻¹` are normal with covariance `R_c`), so it is
//! drawn exactly. The standard deviations `s_{c,j} ~ InvGamma(α_s, β_sj)`
//! get single-site random-walk Metropolis steps on the log scale; `β_sj` is
//! conjugate gamma and `κ_R − J` takes a log-scale random walk.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::hiw::IwSums;
use super::{positive, CovBlock, Latent, SharedHyper};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::random::{gamma, inv_gamma, inv_gamma_logpdf, sample_inv_wishart_factored};
use crate::tuning::Tuning;

#[derive(Clone, Debug)]
pub struct SeparationSpec {
    /// `R_R`; the inverse Wishart scale for `R_c` is its inverse.
    pub r_r: SymMatrix,
    r_scale: SymMatrix,
    r_scale_log_det: f64,
    pub alpha_kappa_r: f64,
    pub beta_kappa_r: f64,
    pub alpha_s: f64,
    pub alpha0: f64,
    pub beta0: Vec<f64>,
}

impl SeparationSpec {
    pub fn new(
        r_r: SymMatrix,
        alpha_kappa_r: f64,
        beta_kappa_r: f64,
        alpha_s: f64,
        alpha0: f64,
        beta0: Vec<f64>,
    ) -> Result<Self> {
        if beta0.len() != r_r.dim() {
            return Err(Error::DimensionMismatch {
                expected: r_r.dim(),
                found: beta0.len(),
            });
        }
        for &b in &beta0 {
            positive("beta0", b)?;
        }
        let r_scale = r_r.inverse()?;
        let r_scale_log_det = r_scale.cholesky()?.log_det();
        Ok(Self {
            r_r,
            r_scale,
            r_scale_log_det,
            alpha_kappa_r: positive("alpha_kappa_r", alpha_kappa_r)?,
            beta_kappa_r: positive("beta_kappa_r", beta_kappa_r)?,
            alpha_s: positive("alpha_s", alpha_s)?,
            alpha0: positive("alpha0", alpha0)?,
            beta0,
        })
    }

    /// `R_R = I`, `κ_R − J ~ InvGamma(1/2, J/2)`, `α_s = 2`, `α₀ = 0.2`,
    /// `β₀ⱼ = 10 / range_j²`.
    pub fn defaults(ranges: &[f64]) -> Result<Self> {
        let dim = ranges.len();
        let beta0 = ranges.iter().map(|r| 10.0 / (r * r)).collect();
        Self::new(SymMatrix::identity(dim), 0.5, 0.5 * dim as f64, 2.0, 0.2, beta0)
    }

    fn dim(&self) -> usize {
        self.beta0.len()
    }

    pub(super) fn initial_shared(&self) -> SharedHyper {
        SharedHyper::Separation {
            kappa_r: self.dim() as f64 + self.beta_kappa_r / (self.alpha_kappa_r + 1.0),
            beta_s: self.beta0.iter().map(|b| self.alpha0 / b).collect(),
        }
    }

    pub(super) fn draw_shared<R: Rng + ?Sized>(&self, rng: &mut R) -> SharedHyper {
        SharedHyper::Separation {
            kappa_r: self.dim() as f64 + inv_gamma(self.alpha_kappa_r, self.beta_kappa_r, rng),
            beta_s: self.beta0.iter().map(|&b| gamma(self.alpha0, b, rng)).collect(),
        }
    }

    fn unpack<'a>(&self, shared: &'a SharedHyper) -> (f64, &'a [f64]) {
        match shared {
            SharedHyper::Separation { kappa_r, beta_s } => (*kappa_r, beta_s),
            other => panic!("separation prior given shared state {other:?}"),
        }
    }

    /// Assembles `Σ = S R S` and its factor.
    pub fn compose(s: Vec<f64>, r: SymMatrix) -> Result<CovBlock> {
        let sigma = r.diag_congruence(&s);
        CovBlock::new(sigma, Latent::Separation { s, r })
    }

    pub(super) fn g0_draw<R: Rng + ?Sized>(&self, shared: &SharedHyper, rng: &mut R) -> Result<CovBlock> {
        let (kappa_r, beta_s) = self.unpack(shared);
        let s = beta_s.iter().map(|&b| inv_gamma(self.alpha_s, b, rng)).collect();
        let (r, _) = sample_inv_wishart_factored(&self.r_scale, kappa_r, rng)?;
        Self::compose(s, r)
    }

    pub(super) fn update<R: Rng + ?Sized>(
        &self,
        block: &CovBlock,
        n: usize,
        scatter: &SymMatrix,
        shared: &SharedHyper,
        tuning: &mut Tuning,
        rng: &mut R,
    ) -> Result<CovBlock> {
        let (kappa_r, beta_s) = self.unpack(shared);
        let mut s = match &block.latent {
            Latent::Separation { s, .. } => s.clone(),
            other => panic!("separation prior given latent {other:?}"),
        };
        let dim = self.dim();

        // R | S: rows rescaled by S⁻¹ have covariance R
        let inv_s: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
        let rescaled = scatter.diag_congruence(&inv_s);
        let (r, r_chol) = sample_inv_wishart_factored(&self.r_scale.add(&rescaled), kappa_r + n as f64, rng)?;

        // s_j | R, rest: the likelihood depends on s through
        // −n Σ log s − ½ Σ_ab (R⁻¹)_ab W_ab / (s_a s_b)
        let r_inv = r_chol.inverse();
        let m = SymMatrix::from_lower_fn(dim, |a, b| r_inv.get(a, b) * scatter.get(a, b));
        let nf = n as f64;
        let adapt = tuning.adapting;
        for j in 0..dim {
            let cross: f64 = (0..dim).filter(|&b| b != j).map(|b| m.get(j, b) / s[b]).sum();
            let mjj = m.get(j, j);
            let (a_s, b_s) = (self.alpha_s, beta_s[j]);
            let log_target = |t: f64| {
                let v = t.exp();
                if !(v > 0.0) || !v.is_finite() {
                    return f64::NEG_INFINITY;
                }
                inv_gamma_logpdf(v, a_s, b_s) + t - nf * t - cross / v - 0.5 * mjj / (v * v)
            };
            let t = s[j].ln();
            let current = log_target(t);
            let (t, _) = tuning.coords[j].step_mh(t, log_target, current, adapt, rng);
            s[j] = t.exp();
        }
        Self::compose(s, r)
    }

    /// `β_sj ~ Gamma(α₀ + |A| α_s, β₀ⱼ + Σ_c 1/s_{c,j})`.
    pub fn draw_beta_s<R: Rng + ?Sized>(&self, inv_s_sums: &[f64], count: usize, rng: &mut R) -> Vec<f64> {
        let shape = self.alpha0 + count as f64 * self.alpha_s;
        self.beta0
            .iter()
            .zip(inv_s_sums)
            .map(|(&b0, &sum)| gamma(shape, b0 + sum, rng))
            .collect()
    }

    pub(super) fn update_shared<R: Rng + ?Sized>(
        &self,
        shared: &mut SharedHyper,
        blocks: &[&CovBlock],
        tuning: &mut Tuning,
        rng: &mut R,
    ) -> Result<()> {
        let (kappa_r, _) = self.unpack(shared);
        let dim = self.dim();
        let j = dim as f64;
        let mut inv_s_sums = alloc::vec![0.0; dim];
        let mut sums = IwSums {
            count: blocks.len() as f64,
            log_det_sum: 0.0,
        };
        let mut trace_sum = 0.0;
        for b in blocks {
            let (s, r) = match &b.latent {
                Latent::Separation { s, r } => (s, r),
                other => panic!("separation prior given latent {other:?}"),
            };
            for (acc, v) in inv_s_sums.iter_mut().zip(s) {
                *acc += 1.0 / v;
            }
            let chol = r.cholesky()?;
            sums.log_det_sum += chol.log_det();
            trace_sum += chol.inverse().trace_product(&self.r_scale);
        }
        let beta_s = self.draw_beta_s(&inv_s_sums, blocks.len(), rng);

        let (alpha, beta) = (self.alpha_kappa_r, self.beta_kappa_r);
        let scale_log_det = self.r_scale_log_det;
        let log_target = |eta: f64| {
            let x = eta.exp();
            if !(x > 0.0) || !x.is_finite() {
                return f64::NEG_INFINITY;
            }
            inv_gamma_logpdf(x, alpha, beta) + eta + sums.log_lik(dim, j + x, scale_log_det, trace_sum)
        };
        let eta = (kappa_r - j).ln();
        let current = log_target(eta);
        let adapt = tuning.adapting;
        let (eta, _) = tuning.hyper.step_mh(eta, log_target, current, adapt, rng);
        *shared = SharedHyper::Separation {
            kappa_r: j + eta.exp(),
            beta_s,
        };
        Ok(())
    }
}
