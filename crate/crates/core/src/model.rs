//! Mixture state, stick-breaking weights and the conjugate updates shared
//! by every covariance prior (component means, base mean, sticks,
//! concentration).

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::data::FeatureMatrix;
use crate::error::Result;
use crate::linalg::{Cholesky, SymMatrix};
use crate::priors::{CovBlock, PriorSpec, SharedHyper};
use crate::random::{self, mvn_logpdf};
use crate::tuning::Tuning;

/// Largest stick value admitted by the concentration update; keeps
/// `log(1 − V)` finite when a Beta draw rounds to one.
const MAX_STICK: f64 = 1.0 - 1e-15;

/// `Gamma(shape, rate)` prior on the concentration parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        Self { shape: 2.0, rate: 1.0 }
    }
}

/// Base measure for the component means: `μ_c ~ N(μ₀, Σ₀)` with fixed
/// `Σ₀` and hyperprior `μ₀ ~ N(μ₀₀, Σ₀₀)`.
#[derive(Clone, Debug)]
pub struct MeanPrior {
    pub sigma0: SymMatrix,
    pub sigma0_chol: Cholesky,
    pub sigma0_inv: SymMatrix,
    pub mu00: Vec<f64>,
    pub sigma00: SymMatrix,
    pub sigma00_inv: SymMatrix,
}

impl MeanPrior {
    pub fn new(sigma0: SymMatrix, mu00: Vec<f64>, sigma00: SymMatrix) -> Result<Self> {
        let sigma0_chol = sigma0.cholesky()?;
        let sigma0_inv = sigma0_chol.inverse();
        let sigma00_inv = sigma00.inverse()?;
        Ok(Self {
            sigma0,
            sigma0_chol,
            sigma0_inv,
            mu00,
            sigma00,
            sigma00_inv,
        })
    }

    /// `μ₀₀` = column means, `Σ₀₀ = Σ₀ = diag(range(X_j)²)`.
    pub fn from_data(data: &FeatureMatrix) -> Result<Self> {
        let sq: Vec<f64> = data.scales().iter().map(|r| r * r).collect();
        let diag = SymMatrix::from_diag(&sq);
        Self::new(diag.clone(), data.means().to_vec(), diag)
    }

    pub fn dim(&self) -> usize {
        self.mu00.len()
    }
}

/// Everything that defines the model apart from the data.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub prior: PriorSpec,
    pub mean: MeanPrior,
    pub alpha: GammaPrior,
}

impl ModelSpec {
    pub fn from_data(prior: PriorSpec, data: &FeatureMatrix) -> Result<Self> {
        Ok(Self {
            prior,
            mean: MeanPrior::from_data(data)?,
            alpha: GammaPrior::default(),
        })
    }
}

/// One mixture component: mean plus the prior-specific covariance block.
#[derive(Clone, Debug)]
pub struct Component {
    pub mean: Vec<f64>,
    pub cov: CovBlock,
}

/// Hyperparameters shared across components.
#[derive(Clone, Debug)]
pub struct SharedState {
    pub mu0: Vec<f64>,
    pub hyper: SharedHyper,
}

/// Full sampler state. Component labels in `z` are zero-based indices into
/// `components`; `v`, `psi` and `components` always have the same length.
#[derive(Clone, Debug)]
pub struct MixtureState {
    pub z: Vec<usize>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub psi: Vec<f64>,
    pub components: Vec<Component>,
    /// Covariance blocks of components past the last occupied label, kept
    /// for reuse when new components are instantiated.
    pub reservoir: Vec<CovBlock>,
    pub alpha: f64,
    pub shared: SharedState,
    pub tuning: Tuning,
}

impl MixtureState {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; self.components.len()];
        for &c in &self.z {
            counts[c] += 1;
        }
        counts
    }

    pub fn n_nonempty(&self) -> usize {
        self.counts().iter().filter(|&&c| c > 0).count()
    }

    /// `1 − Σ ψ_c` computed as `∏ (1 − V_c)`.
    pub fn remainder(&self) -> f64 {
        self.v.iter().map(|v| 1.0 - v).product()
    }

    pub fn recompute_weights(&mut self) {
        self.psi = stick_weights(&self.v).0;
    }
}

/// `ψ_c = V_c ∏_{l<c} (1 − V_l)`; also returns the unassigned remainder
/// `∏_c (1 − V_c)`.
pub fn stick_weights(v: &[f64]) -> (Vec<f64>, f64) {
    let mut remaining = 1.0;
    let psi = v
        .iter()
        .map(|&vc| {
            let w = vc * remaining;
            remaining *= 1.0 - vc;
            w
        })
        .collect();
    (psi, remaining)
}

/// Conditional stick draw: `V_c ~ Beta(1 + n_c, α + Σ_{l>c} n_l)`.
pub fn update_sticks<R: Rng + ?Sized>(counts: &[usize], alpha: f64, rng: &mut R) -> Vec<f64> {
    let mut tail: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&n| {
            tail -= n;
            random::beta(1.0 + n as f64, alpha + tail as f64, rng)
        })
        .collect()
}

/// `α ~ Gamma(a + C, b − Σ_c log(1 − V_c))` over the `C` given sticks.
pub fn update_alpha<R: Rng + ?Sized>(v: &[f64], prior: GammaPrior, rng: &mut R) -> f64 {
    let log_tail: f64 = v.iter().map(|&vc| (-vc.min(MAX_STICK)).ln_1p()).sum();
    random::gamma(prior.shape + v.len() as f64, prior.rate - log_tail, rng)
}

/// `Σ_i log N(x_i; μ_c, Σ_c)`.
pub fn component_loglik<'a>(rows: impl IntoIterator<Item = &'a [f64]>, mean: &[f64], cov_chol: &Cholesky) -> f64 {
    rows.into_iter().map(|x| mvn_logpdf(x, mean, cov_chol)).sum()
}

/// Sufficient statistics of the rows allocated to one component.
#[derive(Clone, Debug)]
pub struct RowStats {
    pub n: usize,
    pub sum: Vec<f64>,
}

impl RowStats {
    pub fn from_rows<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut sum = alloc::vec![0.0; dim];
        let mut n = 0;
        for r in rows {
            n += 1;
            for (s, x) in sum.iter_mut().zip(r) {
                *s += x;
            }
        }
        Self { n, sum }
    }
}

/// `Σ_i (x_i − μ)(x_i − μ)ᵀ`.
pub fn scatter<'a>(dim: usize, rows: impl IntoIterator<Item = &'a [f64]>, mean: &[f64]) -> SymMatrix {
    let mut w = alloc::vec![0.0; dim * dim];
    let mut d = alloc::vec![0.0; dim];
    for r in rows {
        for j in 0..dim {
            d[j] = r[j] - mean[j];
        }
        for i in 0..dim {
            let di = d[i];
            for j in 0..=i {
                w[i * dim + j] += di * d[j];
            }
        }
    }
    SymMatrix::from_lower_fn(dim, |i, j| w[i * dim + j])
}

/// Conjugate mean update from sufficient statistics:
/// `P* = Σ₀⁻¹ + n Σ_c⁻¹`, `m* = P*⁻¹ (Σ₀⁻¹ μ₀ + Σ_c⁻¹ Σ_i x_i)`.
pub fn update_mean<R: Rng + ?Sized>(
    stats: &RowStats,
    sigma_chol: &Cholesky,
    mu0: &[f64],
    sigma0_inv: &SymMatrix,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = stats.n as f64;
    let mut precision = sigma0_inv.clone();
    let mut linear = sigma0_inv.mul_vec(mu0);
    if stats.n > 0 {
        let sigma_inv = sigma_chol.inverse();
        precision.add_assign(&sigma_inv.scaled(n));
        for (l, s) in linear.iter_mut().zip(sigma_chol.solve(&stats.sum)) {
            *l += s;
        }
    }
    random::sample_mvn_precision(&precision, &linear, rng)
}

/// Row-based form of [`update_mean`].
pub fn update_mu_c<'a, R: Rng + ?Sized>(
    rows: impl IntoIterator<Item = &'a [f64]>,
    sigma_c: &SymMatrix,
    mu0: &[f64],
    sigma0: &SymMatrix,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let stats = RowStats::from_rows(mu0.len(), rows);
    update_mean(&stats, &sigma_c.cholesky()?, mu0, &sigma0.inverse()?, rng)
}

/// `μ₀ | {μ_c}` with precision `Σ₀₀⁻¹ + K Σ₀⁻¹`; reduces to a prior draw
/// when no component means are given.
pub fn update_mu0<'a, R: Rng + ?Sized>(
    means: impl IntoIterator<Item = &'a [f64]>,
    prior: &MeanPrior,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let dim = prior.dim();
    let stats = RowStats::from_rows(dim, means);
    let mut precision = prior.sigma00_inv.clone();
    let mut linear = prior.sigma00_inv.mul_vec(&prior.mu00);
    if stats.n > 0 {
        precision.add_assign(&prior.sigma0_inv.scaled(stats.n as f64));
        for (l, s) in linear.iter_mut().zip(prior.sigma0_inv.mul_vec(&stats.sum)) {
            *l += s;
        }
    }
    random::sample_mvn_precision(&precision, &linear, rng)
}
