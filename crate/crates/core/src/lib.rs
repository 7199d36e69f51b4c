//! Dirichlet process mixtures of multivariate Gaussians with a choice of
//! seven priors for the component covariance matrices, fitted by a
//! conditional slice sampler on the stick-breaking representation.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! and wall-clock timing live in the companion `dpmix-cli` crate.

#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod linalg;
pub mod model;
pub mod postprocess;
pub mod priors;
pub mod random;
pub mod sampler;
pub mod simgen;
pub mod tuning;

pub use data::FeatureMatrix;
pub use error::{Error, Result};
pub use linalg::{Cholesky, SpectralPair, SymMatrix};
pub use model::{Component, GammaPrior, MeanPrior, MixtureState, ModelSpec, SharedState};

pub use postprocess::{
    adjusted_rand, best_partition, similarity, summarize, BestPartition, ChainSummary, Partition, SimilarityMatrix,
};
pub use priors::{CovBlock, Latent, PriorFamily, PriorSpec, SharedHyper};
pub use sampler::{run_chain, ChainOutput, Clock, InitStrategy, McmcConfig, NoClock, Observer};
pub use simgen::{CorrelationKind, Preset, ScenarioSpec};
