use std::path::Path;

use healthcast_core::data::DataError;
use healthcast_core::learners::LearnerError;
use healthcast_core::tuning::TuningError;

use crate::ingest::MineError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mine(#[from] MineError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Tuning(#[from] TuningError),
}

impl Error {
    pub fn data(msg: impl Into<String>) -> Error {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Error {
        Error::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Error {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status: 1 usage, 2 data, 3 network/auth.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Mine(e) if e.is_network() => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Error {
        Error::Io {
            path: String::from("<io>"),
            source,
        }
    }
}

impl From<DataError> for Error {
    fn from(e: DataError) -> Error {
        Error::Data(e.to_string())
    }
}
