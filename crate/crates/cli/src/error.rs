use std::fmt::Display;
use std::path::Path;

use mtkit::augmentation::AugmentError;
use mtkit::corpus::{ManifestError, ReformatError};
use mtkit::decoding::DecodeError;
use mtkit::metrics::MetricError;
use mtkit::routing::RoutingError;
use mtkit::sampling::SamplingError;
use mtkit::tokenizer::TokenizerError;
use mtkit::trainer::TrainError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
    #[error("stage {index} ({name}): {source}")]
    Stage {
        index: usize,
        name: String,
        source: Box<CliError>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Stage { source, .. } => source.exit_code(),
        }
    }

    pub fn usage(msg: impl Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn data(msg: impl Display) -> Self {
        CliError::Data(msg.to_string())
    }

    pub fn at(path: &Path, err: impl Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::data(e)
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::UnknownSubset(_) => CliError::usage(e),
            _ => CliError::data(e),
        }
    }
}

impl From<ReformatError> for CliError {
    fn from(e: ReformatError) -> Self {
        CliError::data(e)
    }
}

impl From<TokenizerError> for CliError {
    fn from(e: TokenizerError) -> Self {
        match e {
            TokenizerError::InvalidAlpha(_) => CliError::usage(e),
            TokenizerError::Sampling(s) => s.into(),
            _ => CliError::data(e),
        }
    }
}

impl From<RoutingError> for CliError {
    fn from(e: RoutingError) -> Self {
        CliError::data(e)
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        CliError::usage(e)
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::InvalidTemperature(_) | SamplingError::InvalidRho(_) => CliError::usage(e),
            SamplingError::Empty
            | SamplingError::NonPositiveSize { .. }
            | SamplingError::DimensionMismatch { .. } => CliError::data(e),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::ZeroSteps | TrainError::BadLearningRate(_) | TrainError::BadAverage { .. } => {
                CliError::usage(e)
            }
            TrainError::Diverged { .. } => CliError::Numeric(e.to_string()),
            TrainError::Sampling(s) => s.into(),
            _ => CliError::data(e),
        }
    }
}

impl From<DecodeError> for CliError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            DecodeError::VocabMismatch { .. } => CliError::data(e),
            _ => CliError::usage(e),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        CliError::data(e)
    }
}
