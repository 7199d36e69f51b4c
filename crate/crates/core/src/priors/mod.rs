//! Covariance priors for the mixture components.
//!
//! Each family supplies a draw from its base measure (used for empty and
//! newly instantiated components), a conditional update of one component's
//! covariance block given the scatter of its rows about the component mean,
//! and an update of whatever hyperparameters the components share.

mod hiw;
mod independent;
mod iw;
mod logcov;
mod separation;
mod sparse;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SymMatrix};
use crate::tuning::Tuning;

pub use hiw::{Hiw1Spec, Hiw2Spec};
pub use independent::IndependentSpec;
pub use iw::IwSpec;
pub use logcov::{log_coordinates, log_lik_exact, log_matrix, log_vector, LogExpansion, LogSpec};
pub use separation::SeparationSpec;
pub use sparse::{sparse_log_kernel, SparseSpec};

/// Attempts made by a base-measure draw before giving up on numerically
/// degenerate samples.
pub const MAX_PRIOR_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriorFamily {
    InverseWishart,
    Hiw1,
    Hiw2,
    Separation,
    Log,
    Sparse,
    Independent,
}

impl PriorFamily {
    pub const ALL: [PriorFamily; 7] = [
        PriorFamily::InverseWishart,
        PriorFamily::Hiw1,
        PriorFamily::Hiw2,
        PriorFamily::Separation,
        PriorFamily::Log,
        PriorFamily::Sparse,
        PriorFamily::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PriorFamily::InverseWishart => "iw",
            PriorFamily::Hiw1 => "hiw1",
            PriorFamily::Hiw2 => "hiw2",
            PriorFamily::Separation => "separation",
            PriorFamily::Log => "log",
            PriorFamily::Sparse => "sparse",
            PriorFamily::Independent => "independent",
        }
    }
}

impl fmt::Display for PriorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownFamily;

impl fmt::Display for UnknownFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected one of iw, hiw1, hiw2, separation, log, sparse, independent")
    }
}

impl FromStr for PriorFamily {
    type Err = UnknownFamily;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        PriorFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or(UnknownFamily)
    }
}

/// Prior-specific per-component state carried alongside `Σ_c`.
#[derive(Clone, Debug, PartialEq)]
pub enum Latent {
    None,
    /// `Σ_c = S_c R_c S_c` with `S_c = diag(s)`.
    Separation {
        s: Vec<f64>,
        r: SymMatrix,
    },
    /// `Σ_c = exp(A(a))`.
    Log {
        a: Vec<f64>,
    },
    /// Precision `T_c = Σ_c⁻¹` and the normal scale-mixture variances
    /// `M₁` (zero diagonal).
    Sparse {
        precision: SymMatrix,
        m1: SymMatrix,
    },
}

/// Component covariance with its factor and prior-specific latents.
#[derive(Clone, Debug)]
pub struct CovBlock {
    pub sigma: SymMatrix,
    pub chol: Cholesky,
    pub latent: Latent,
}

impl CovBlock {
    pub fn new(sigma: SymMatrix, latent: Latent) -> Result<Self> {
        let chol = sigma.cholesky()?;
        Ok(Self { sigma, chol, latent })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// `Σ_c⁻¹`, read from the latent precision when one is carried.
    pub fn precision(&self) -> SymMatrix {
        match &self.latent {
            Latent::Sparse { precision, .. } => precision.clone(),
            _ => self.chol.inverse(),
        }
    }
}

/// Hyperparameters shared by all components of one prior family.
#[derive(Clone, Debug, PartialEq)]
pub enum SharedHyper {
    None,
    Hiw1 { r0: SymMatrix, kappa0: f64 },
    Hiw2 { delta: Vec<f64>, eps0: f64 },
    Separation { kappa_r: f64, beta_s: Vec<f64> },
}

/// Prior family together with its fixed hyperparameters.
#[derive(Clone, Debug)]
pub enum PriorSpec {
    InverseWishart(IwSpec),
    Hiw1(Hiw1Spec),
    Hiw2(Hiw2Spec),
    Separation(SeparationSpec),
    Log(LogSpec),
    Sparse(SparseSpec),
    Independent(IndependentSpec),
}

impl PriorSpec {
    /// Default hyperparameters for `family`, scaled to the column ranges of
    /// `data` where the family calls for it.
    pub fn defaults(family: PriorFamily, data: &FeatureMatrix) -> Result<Self> {
        let ranges = data.scales();
        let dim = ranges.len();
        Ok(match family {
            PriorFamily::InverseWishart => PriorSpec::InverseWishart(IwSpec::defaults(&ranges)?),
            PriorFamily::Hiw1 => PriorSpec::Hiw1(Hiw1Spec::defaults(dim)?),
            PriorFamily::Hiw2 => PriorSpec::Hiw2(Hiw2Spec::defaults(&ranges)?),
            PriorFamily::Separation => PriorSpec::Separation(SeparationSpec::defaults(&ranges)?),
            PriorFamily::Log => PriorSpec::Log(LogSpec::defaults(dim)?),
            PriorFamily::Sparse => PriorSpec::Sparse(SparseSpec::defaults(dim)?),
            PriorFamily::Independent => PriorSpec::Independent(IndependentSpec::defaults(&ranges)?),
        })
    }

    pub fn family(&self) -> PriorFamily {
        match self {
            PriorSpec::InverseWishart(_) => PriorFamily::InverseWishart,
            PriorSpec::Hiw1(_) => PriorFamily::Hiw1,
            PriorSpec::Hiw2(_) => PriorFamily::Hiw2,
            PriorSpec::Separation(_) => PriorFamily::Separation,
            PriorSpec::Log(_) => PriorFamily::Log,
            PriorSpec::Sparse(_) => PriorFamily::Sparse,
            PriorSpec::Independent(_) => PriorFamily::Independent,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            PriorSpec::InverseWishart(s) => s.scale.dim(),
            PriorSpec::Hiw1(s) => s.r1.dim(),
            PriorSpec::Hiw2(s) => s.g.len(),
            PriorSpec::Separation(s) => s.beta0.len(),
            PriorSpec::Log(s) => s.dim(),
            PriorSpec::Sparse(s) => s.m0.dim(),
            PriorSpec::Independent(s) => s.shape.len(),
        }
    }

    /// Starting value for the shared hyperparameters: a central point of
    /// the hyperprior (mean, or mode where the mean does not exist).
    pub fn initial_shared(&self) -> SharedHyper {
        match self {
            PriorSpec::Hiw1(s) => s.initial_shared(),
            PriorSpec::Hiw2(s) => s.initial_shared(),
            PriorSpec::Separation(s) => s.initial_shared(),
            _ => SharedHyper::None,
        }
    }

    /// Draw of the shared hyperparameters from their hyperprior.
    pub fn draw_shared<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SharedHyper> {
        match self {
            PriorSpec::Hiw1(s) => s.draw_shared(rng),
            PriorSpec::Hiw2(s) => Ok(s.draw_shared(rng)),
            PriorSpec::Separation(s) => Ok(s.draw_shared(rng)),
            _ => Ok(SharedHyper::None),
        }
    }

    /// Draw of one component's covariance block from the base measure given
    /// the shared hyperparameters. Numerically degenerate draws are retried.
    pub fn g0_draw<R: Rng + ?Sized>(&self, shared: &SharedHyper, rng: &mut R) -> Result<CovBlock> {
        for _ in 0..MAX_PRIOR_ATTEMPTS {
            let draw = match self {
                PriorSpec::InverseWishart(s) => s.g0_draw(rng),
                PriorSpec::Hiw1(s) => s.g0_draw(shared, rng),
                PriorSpec::Hiw2(s) => s.g0_draw(shared, rng),
                PriorSpec::Separation(s) => s.g0_draw(shared, rng),
                PriorSpec::Log(s) => s.g0_draw(rng),
                PriorSpec::Sparse(s) => s.g0_draw(rng),
                PriorSpec::Independent(s) => s.g0_draw(rng),
            };
            match draw {
                Ok(block) => return Ok(block),
                Err(Error::NotPositiveDefinite) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::PriorDrawFailed {
            family: self.family(),
            attempts: MAX_PRIOR_ATTEMPTS,
        })
    }

    /// New parameters for an instantiated component that holds no rows. For
    /// the sparse prior this continues the prior-only block Gibbs chain from
    /// the current block, which leaves the base measure invariant.
    pub fn refresh_empty<R: Rng + ?Sized>(
        &self,
        block: &CovBlock,
        shared: &SharedHyper,
        rng: &mut R,
    ) -> Result<CovBlock> {
        match self {
            PriorSpec::Sparse(s) => match s.refresh(block, rng) {
                Err(Error::NotPositiveDefinite) => self.g0_draw(shared, rng),
                other => other,
            },
            _ => self.g0_draw(shared, rng),
        }
    }

    /// Conditional draw of a component's covariance block given `n` rows
    /// whose scatter about the component mean is `scatter`.
    pub fn update_cov<R: Rng + ?Sized>(
        &self,
        block: &CovBlock,
        n: usize,
        scatter: &SymMatrix,
        shared: &SharedHyper,
        tuning: &mut Tuning,
        rng: &mut R,
    ) -> Result<CovBlock> {
        match self {
            PriorSpec::InverseWishart(s) => s.update(n, scatter, rng),
            PriorSpec::Hiw1(s) => s.update(n, scatter, shared, rng),
            PriorSpec::Hiw2(s) => s.update(n, scatter, shared, rng),
            PriorSpec::Separation(s) => s.update(block, n, scatter, shared, tuning, rng),
            PriorSpec::Log(s) => s.update(block, n, scatter, rng),
            PriorSpec::Sparse(s) => s.update(block, n, scatter, rng),
            PriorSpec::Independent(s) => s.update(n, scatter, rng),
        }
    }

    /// Update of the shared hyperparameters given the covariance blocks of
    /// the nonempty components.
    pub fn update_shared<R: Rng + ?Sized>(
        &self,
        shared: &mut SharedHyper,
        blocks: &[&CovBlock],
        tuning: &mut Tuning,
        rng: &mut R,
    ) -> Result<()> {
        match self {
            PriorSpec::Hiw1(s) => s.update_shared(shared, blocks, tuning, rng),
            PriorSpec::Hiw2(s) => s.update_shared(shared, blocks, tuning, rng),
            PriorSpec::Separation(s) => s.update_shared(shared, blocks, tuning, rng),
            _ => Ok(()),
        }
    }
}

/// Parameter check shared by the hyperparameter constructors.
pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter { name, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_round_trip() {
        for f in PriorFamily::ALL {
            assert_eq!(f.name().parse::<PriorFamily>(), Ok(f));
        }
        assert_eq!("IW".parse::<PriorFamily>(), Ok(PriorFamily::InverseWishart));
        assert!("wishart".parse::<PriorFamily>().is_err());
    }
}
