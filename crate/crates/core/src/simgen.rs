//! Simulated Gaussian cluster designs used for benchmarking the priors.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::postprocess::Partition;
use crate::random::sample_mvn;

/// `var` on the diagonal, `var·rho` everywhere else.
pub fn equicorr_cov(dim: usize, var: f64, rho: f64) -> Result<SymMatrix> {
    let m = SymMatrix::from_lower_fn(dim, |i, j| if i == j { var } else { var * rho });
    m.cholesky()?;
    Ok(m)
}

/// `nblocks` equal diagonal blocks, each equicorrelated with `rho`.
pub fn blockcorr_cov(dim: usize, var: f64, rho: f64, nblocks: usize) -> Result<SymMatrix> {
    if nblocks == 0 || !dim.is_multiple_of(nblocks) {
        return Err(Error::IndivisibleBlocks { dim, nblocks });
    }
    let size = dim / nblocks;
    let m = SymMatrix::from_lower_fn(dim, |i, j| {
        if i == j {
            var
        } else if i / size == j / size {
            var * rho
        } else {
            0.0
        }
    });
    m.cholesky()?;
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrelationKind {
    Equicorrelated,
    BlockDiagonal(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSpec {
    pub mean: Vec<f64>,
    pub var: f64,
    pub rho: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub clusters: Vec<ClusterSpec>,
    pub correlation: CorrelationKind,
    pub seed: u64,
}

/// The seven benchmark designs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    DataI,
    DataII,
    DataIII,
    DataIV,
    DataV,
    DataVI,
    DataVII,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::DataI,
        Preset::DataII,
        Preset::DataIII,
        Preset::DataIV,
        Preset::DataV,
        Preset::DataVI,
        Preset::DataVII,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::DataI => "data1",
            Preset::DataII => "data2",
            Preset::DataIII => "data3",
            Preset::DataIV => "data4",
            Preset::DataV => "data5",
            Preset::DataVI => "data6",
            Preset::DataVII => "data7",
        }
    }

    /// Accepts `data3`, `dataIII`, `III` or `3`, ignoring case.
    pub fn parse(s: &str) -> Option<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let key = lower
            .strip_prefix("data")
            .unwrap_or(&lower)
            .trim_start_matches(['_', '-', ' ']);
        let idx = match key {
            "1" | "i" => 0,
            "2" | "ii" => 1,
            "3" | "iii" => 2,
            "4" | "iv" => 3,
            "5" | "v" => 4,
            "6" | "vi" => 5,
            "7" | "vii" => 6,
            _ => return None,
        };
        Some(Self::ALL[idx])
    }

    pub fn spec(self, seed: u64) -> ScenarioSpec {
        let rep = |blocks: [f64; 4]| -> Vec<f64> { blocks.iter().flat_map(|&b| core::iter::repeat_n(b, 5)).collect() };
        let dense = [
            [3.0, 12.0, 18.0, 12.0],
            [12.0, 18.0, 3.0, 18.0],
            [18.0, 18.0, 12.0, 8.0],
            [18.0, 3.0, 8.0, 3.0],
            [8.0, 8.0, 12.0, 3.0],
        ];
        let dense_rho = [0.2, 0.5, 0.3, 0.1, 0.7];
        let build = |means: Vec<Vec<f64>>, var: f64, rhos: [f64; 5], n: usize, corr| ScenarioSpec {
            clusters: means
                .into_iter()
                .zip(rhos)
                .map(|(mean, rho)| ClusterSpec { mean, var, rho, n })
                .collect(),
            correlation: corr,
            seed,
        };
        let dense_means = || dense.iter().map(|&b| rep(b)).collect::<Vec<_>>();
        match self {
            Preset::DataI => build(
                vec![
                    vec![5.0, 35.0, 75.0, 5.0, 5.0, 5.0],
                    vec![35.0, 5.0, 5.0, 5.0, 5.0, 5.0],
                    vec![5.0, 75.0, 5.0, 5.0, 5.0, 35.0],
                    vec![5.0, 5.0, 35.0, 5.0, 5.0, 75.0],
                    vec![35.0, 75.0, 35.0, 5.0, 5.0, 5.0],
                ],
                1.0,
                [0.0; 5],
                100,
                CorrelationKind::Equicorrelated,
            ),
            Preset::DataII => build(
                vec![
                    rep([3.0, 32.0, 35.0, 72.0]),
                    rep([32.0, 5.0, 5.0, 35.0]),
                    rep([25.0, 15.0, 32.0, 3.0]),
                    rep([15.0, 75.0, 8.0, 75.0]),
                    rep([8.0, 6.0, 25.0, 5.0]),
                ],
                5.0,
                dense_rho,
                200,
                CorrelationKind::Equicorrelated,
            ),
            Preset::DataIII => build(dense_means(), 3.0, dense_rho, 200, CorrelationKind::Equicorrelated),
            Preset::DataIV => build(dense_means(), 9.0, dense_rho, 200, CorrelationKind::Equicorrelated),
            Preset::DataV => build(dense_means(), 3.0, [0.7; 5], 200, CorrelationKind::BlockDiagonal(5)),
            Preset::DataVI => build(dense_means(), 9.0, [0.7; 5], 200, CorrelationKind::BlockDiagonal(5)),
            Preset::DataVII => build(dense_means(), 9.0, [0.7; 5], 500, CorrelationKind::BlockDiagonal(5)),
        }
    }
}

impl ScenarioSpec {
    pub fn dim(&self) -> usize {
        self.clusters.first().map_or(0, |c| c.mean.len())
    }

    pub fn cov(&self, cluster: &ClusterSpec) -> Result<SymMatrix> {
        match self.correlation {
            CorrelationKind::Equicorrelated => equicorr_cov(self.dim(), cluster.var, cluster.rho),
            CorrelationKind::BlockDiagonal(b) => blockcorr_cov(self.dim(), cluster.var, cluster.rho, b),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.clusters.is_empty() || dim == 0 {
            return Err(Error::EmptyData);
        }
        for c in &self.clusters {
            if c.mean.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.mean.len(),
                });
            }
            if !(c.var > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "var",
                    value: c.var,
                });
            }
            self.cov(c)?;
        }
        Ok(())
    }

    /// Draws every cluster from its normal distribution with the RNG seeded
    /// by `seed`, then shuffles the rows. True labels are returned in the
    /// shuffled order.
    pub fn generate(&self) -> Result<(FeatureMatrix, Partition)> {
        self.generate_with(&mut ChaCha8Rng::seed_from_u64(self.seed))
    }

    pub fn generate_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(FeatureMatrix, Partition)> {
        self.validate()?;
        let dim = self.dim();
        let mut rows: Vec<(u32, Vec<f64>)> = Vec::new();
        for (k, c) in self.clusters.iter().enumerate() {
            let chol = self.cov(c)?.cholesky()?;
            for _ in 0..c.n {
                rows.push((k as u32, sample_mvn(&c.mean, &chol, rng)));
            }
        }
        rows.shuffle(rng);
        let labels: Vec<u32> = rows.iter().map(|(k, _)| *k).collect();
        let values: Vec<f64> = rows.into_iter().flat_map(|(_, r)| r).collect();
        let data = FeatureMatrix::new(labels.len(), dim, values)?;
        Ok((data, Partition::from_labels(&labels)))
    }
}
