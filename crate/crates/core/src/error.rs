use thiserror::Error;

/// Errors produced by the modelling, identification, analysis and benchmark layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("quantisation level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("malformed model: field `{field}`: {reason}")]
    MalformedModel { field: String, reason: String },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("inconsistent system: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Inconsistent { residual: f64, tolerance: f64 },

    #[error("bad pin pattern: {0}")]
    BadPinPattern(String),

    #[error("insufficient queries: {0}")]
    InsufficientQueries(String),

    #[error("singular geometry: restoring force undefined at y={y}, x={x}")]
    SingularGeometry { y: f64, x: f64 },

    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("bad block size: {0}")]
    BadBlockSize(String),

    #[error("degenerate reference series: max equals min")]
    DegenerateReference,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn malformed(field: &str, reason: impl Into<String>) -> Self {
        Error::MalformedModel {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
