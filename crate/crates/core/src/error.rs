use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("negative range {value} at index {index}")]
    NegativeRange { index: usize, value: f64 },

    #[error("lower bound {lower} exceeds upper bound {upper} at row {row}")]
    BoundViolation { row: usize, lower: f64, upper: f64 },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("log of non-positive range iterate {value} at step {step}")]
    LogDomain { step: usize, value: f64 },

    #[error("degenerate series: sample variance is zero")]
    DegenerateSeries,

    #[error("order {order} is too large for a series of length {len}")]
    OrderTooLarge { order: usize, len: usize },

    #[error("segment length {segment} exceeds series length {len}")]
    SegmentTooLong { segment: usize, len: usize },

    #[error("parse error at row {row}: {reason}")]
    Parse { row: usize, reason: String },

    #[error("bin count {bins} is invalid for a window of length {len}")]
    BinCountTooLarge { bins: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unsupported model version {found} (supported: {supported})")]
    VersionMismatch { found: u64, supported: u64 },

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("normal equations are singular")]
    SingularSystem,

    #[error("target is constant; cannot fit")]
    DegenerateTarget,

    #[error("zero denominator at index {index}")]
    ZeroDenominator { index: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    /// Tags the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, with stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
