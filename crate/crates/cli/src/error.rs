use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: row {row}, column {col}: cannot parse {value:?} as a number", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },
    #[error("{}: column {column} is constant", path.display())]
    ConstantColumn { path: PathBuf, column: String },
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numerical(#[from] dpmix_core::Error),
    #[error("{failed} of {total} runs failed")]
    RunsFailed { failed: usize, total: usize },
}

impl CliError {
    /// 2 for configuration problems, 3 for unreadable or invalid data,
    /// 4 for failures inside the sampler or post-processing.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse { .. } | CliError::ConstantColumn { .. } | CliError::Data { .. } | CliError::Io { .. } => 3,
            CliError::Numerical(_) | CliError::RunsFailed { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, message: impl ToString) -> CliError {
        CliError::Data {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
