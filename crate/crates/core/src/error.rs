use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),

    #[error("no spectral bin within {center_hz} ± {halfwidth_hz} Hz")]
    EmptyBand { center_hz: f64, halfwidth_hz: f64 },

    #[error("observation `{sample_id}` has a different channel set")]
    ChannelMismatch { sample_id: String },

    #[error("label `{0}` is not among the categories")]
    UnknownLabel(String),

    #[error("bray-curtis requires non-negative data")]
    NegativeInput,

    #[error("k = {k} exceeds the number of samples ({n})")]
    KTooLarge { k: usize, n: usize },

    #[error("mixture component {component} degenerated")]
    DegenerateComponent { component: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("only one distinct cluster label")]
    SingleCluster,

    #[error("at least two groups are required")]
    SingleGroup,

    #[error("need at least {needed} points on the selection curve, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid distribution parameters: {0}")]
    InvalidParams(String),

    #[error("sample of size {0} is too small")]
    SampleTooSmall(usize),

    #[error("sample of size {0} is too large")]
    SampleTooLarge(usize),

    #[error("all values are identical")]
    ZeroRange,

    #[error("group `{group}` has zero variance")]
    ZeroVariance { group: String },

    #[error("all points are identical; total variation is zero")]
    ZeroTotalVariation,

    #[error("within-group residual variation is zero")]
    ZeroResidual,

    #[error("sampling rate {fs} Hz cannot represent {max_freq} Hz")]
    AliasError { fs: f64, max_freq: f64 },

    #[error("report has no `{0}` section")]
    MissingSection(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("failed to parse {}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for CLI exit codes and the C ABI status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Config(_) => ErrorKind::Config,
            DegenerateComponent { .. }
            | ZeroRange
            | ZeroVariance { .. }
            | ZeroTotalVariation
            | ZeroResidual
            | SingleCluster
            | NonFinite(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
