use alloc::boxed::Box;

use crate::priors::PriorFamily;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("eigen decomposition did not converge")]
    NoConvergence,
    #[error("degrees of freedom {df} too small for dimension {dim}")]
    DegreesOfFreedomTooSmall { df: f64, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter `{name}`: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("partitions have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("column {column} is constant")]
    ConstantColumn { column: usize },
    #[error("feature matrix is empty")]
    EmptyData,
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("{nblocks} blocks do not divide dimension {dim}")]
    IndivisibleBlocks { dim: usize, nblocks: usize },
    #[error("log-prior expansion needs {q} coordinates, above the cap for dimension {cap_dim}")]
    QComputationOverflow { q: usize, cap_dim: usize },
    #[error("{family:?} prior draw failed after {attempts} attempts")]
    PriorDrawFailed { family: PriorFamily, attempts: usize },
    #[error("more than {cap} components instantiated in one sweep (runaway concentration?)")]
    InstantiationCap { cap: usize },
    #[error("component {index} update failed under the {family:?} prior: {source}")]
    Component {
        index: usize,
        family: PriorFamily,
        source: Box<Error>,
    },
    #[error("sweep {sweep} failed: {source}")]
    Sweep { sweep: usize, source: Box<Error> },
}
