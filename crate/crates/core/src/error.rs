use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: {detail}")]
    Shape { layer: usize, detail: String },

    #[error("invalid network: {0}")]
    Network(String),

    #[error("stale forward cache: {0}")]
    StaleCache(String),

    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),

    #[error("parameter file mismatch: {0}")]
    SpecMismatch(String),

    #[error("corrupt file {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("action {0} is masked in the current state")]
    MaskedAction(String),

    #[error("missing runs: {0}")]
    MissingRuns(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Network(_) => "network",
            Error::StaleCache(_) => "stale_cache",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::NonFiniteLoss(_) => "non_finite_loss",
            Error::SpecMismatch(_) => "spec_mismatch",
            Error::Corrupt { .. } => "corrupt",
            Error::Config(_) => "config",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::EpisodeFinished => "episode_finished",
            Error::MaskedAction(_) => "masked_action",
            Error::MissingRuns(_) => "missing_runs",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }
}
