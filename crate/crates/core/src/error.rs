//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used by callers that map failures to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid configuration: bad parameters, malformed config files.
    Config,
    /// Bad or missing input data: I/O, decode failures, empty datasets.
    Data,
    /// Numerically degenerate computation: zero variance, singular systems.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("crop of size {size} does not fit a {height}x{width} image")]
    CropTooLarge {
        size: usize,
        height: usize,
        width: usize,
    },

    #[error("augmentation magnitude {magnitude} exceeds bound {bound} for {kind}")]
    MagnitudeOutOfBounds {
        kind: &'static str,
        magnitude: f64,
        bound: f64,
    },

    #[error("distortion model {0} out of range 1..=25")]
    ModelOutOfRange(u8),

    #[error("severity level {0} out of range 1..=5")]
    LevelOutOfRange(u8),

    #[error("severity schedule has no entry for model {0}")]
    ScheduleMissing(u8),

    #[error("severity schedule for model {model} is not strictly monotone: {params:?}")]
    ScheduleNotMonotone { model: u8, params: Vec<f64> },

    #[error("no decodable images found in {0}")]
    EmptyInputDir(PathBuf),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input too short: need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid search failed at cell (lambda1={lambda1}, lambda2={lambda2}): {source}")]
    GridCell {
        lambda1: f64,
        lambda2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("feature width {got} does not match first layer width {expected}")]
    FeatureWidthMismatch { expected: usize, got: usize },

    #[error("training corpus spans a single class; classification needs at least two")]
    SingleClass,

    #[error("singular least-squares system")]
    SingularSystem,

    #[error("no prediction supplied for selected predictor {0}")]
    MissingPredictor(usize),

    #[error("dataset `{name}` too small: {got} entries, need at least {need}")]
    DatasetTooSmall {
        name: String,
        got: usize,
        need: usize,
    },

    #[error("train and test dataset names must differ, both are `{0}`")]
    DatasetNameClash(String),

    #[error("labels of dataset `{0}` are sealed until the metric stage")]
    SealedLabels(String),

    #[error("unknown ablation toggle `{0}`")]
    UnknownToggle(String),

    #[error("{path} row {row}: {reason}")]
    BadRecord {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn decode(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Decode {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn stage(stage: &'static str, source: Error) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } | Decode { .. } | UnsupportedFormat(_) | EmptyInputDir(_) => ErrorKind::Data,
            LengthMismatch { .. } | TooFewValues { .. } => ErrorKind::Data,
            DatasetTooSmall { .. } | BadRecord { .. } => ErrorKind::Data,
            SingleClass => ErrorKind::Data,
            CropTooLarge { .. } | MagnitudeOutOfBounds { .. } => ErrorKind::Config,
            ModelOutOfRange(_) | LevelOutOfRange(_) => ErrorKind::Config,
            ScheduleMissing(_) | ScheduleNotMonotone { .. } => ErrorKind::Config,
            InvalidConfig(_) | UnknownToggle(_) | DatasetNameClash(_) => ErrorKind::Config,
            FeatureWidthMismatch { .. } => ErrorKind::Config,
            Degenerate(_) | NonFinite | SingularSystem => ErrorKind::Numeric,
            MissingPredictor(_) => ErrorKind::Config,
            SealedLabels(_) => ErrorKind::Data,
            GridCell { source, .. } | Stage { source, .. } => source.kind(),
        }
    }
}
