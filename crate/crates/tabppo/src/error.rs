use std::path::PathBuf;

use tabppo_core::data::DataError;
use tabppo_core::metrics::MetricsError;
use tabppo_core::rl::RlError;
use tabppo_core::{ConfigError, TensorError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {message}", path.display())]
    Checkpoint { path: PathBuf, message: String },
    #[error(transparent)]
    Training(#[from] RlError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Numerical(#[from] TensorError),
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.0)
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Process exit status: 2 configuration, 3 data, 4 numerical abort.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io { .. } | Error::Csv { .. } | Error::Checkpoint { .. } | Error::Metrics(_) => 3,
            Error::Numerical(_) => 4,
            Error::Training(e) => match e {
                RlError::Config(_) => 2,
                RlError::Data(_) | RlError::Metrics(_) => 3,
                RlError::Tensor(_) | RlError::NonFiniteLoss { .. } => 4,
            },
        }
    }
}
