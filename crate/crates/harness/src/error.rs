use std::path::{Path, PathBuf};

use gridprobe_core::deviation::DeviationError;
use gridprobe_core::imaging::ImagingError;
use gridprobe_core::netcore::NetError;
use gridprobe_core::rsa::RsaError;
use gridprobe_core::stimuli::StimulusError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("manifest {manifest}: entry {entry} refers to missing file {path}")]
    StimulusNotFound {
        manifest: PathBuf,
        entry: String,
        path: PathBuf,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Rsa(#[from] RsaError),
    #[error(transparent)]
    Deviation(#[from] DeviationError),
}

impl HarnessError {
    /// Stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "ConfigError",
            HarnessError::StimulusNotFound { .. } => "StimulusNotFound",
            HarnessError::Io { .. } => "IoError",
            HarnessError::Json { .. } => "JsonError",
            HarnessError::Csv(_) => "IoError",
            HarnessError::Net(e) => match e {
                NetError::Format(_) => "FormatError",
                NetError::IncompatibleModel(_) => "IncompatibleModel",
                NetError::CorruptContainer(_) => "CorruptContainer",
                NetError::Io { .. } => "IoError",
                NetError::InvalidInput(_) => "InvalidInput",
                NetError::InvalidGeometry(_) => "InvalidGeometry",
                NetError::IncompatibleShape(_) => "IncompatibleShape",
            },
            HarnessError::Stimulus(_) => "StimulusError",
            HarnessError::Imaging(_) => "ImagingError",
            HarnessError::Rsa(RsaError::UnknownLayer(_)) => "UnknownLayer",
            HarnessError::Rsa(_) => "DissimilarityError",
            HarnessError::Deviation(_) => "DeviationError",
        }
    }

    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
        move |source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
