use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Model(#[from] kylepriv_core::Error),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Thread(String),
    #[error("encoding report: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Model(e) if e.is_validation() => 2,
            LabError::Input(_) => 2,
            LabError::Usage(e) => e.exit_code() as u8,
            LabError::Csv { source, .. } if !source.is_io_error() => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        LabError::Csv {
            path: path.into(),
            source,
        }
    }
}
