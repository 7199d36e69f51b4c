//! File formats, experiment configuration and the batch runner behind the
//! `dpmix` command.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use config::{DataSource, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiment::{run_experiment, summarize_dir, ExperimentReport};
