use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate system: p = {p} parameters with f = {f} fundamental units leaves no free dimensionless group")]
    DegenerateSystem { p: usize, f: usize },

    #[error("target quantity `{0}` cannot be isolated with exponent +1 in a single Pi group")]
    InfeasibleTarget(String),

    #[error("pi evaluation failed on quantity `{quantity}`: {reason}")]
    PiEvaluation { quantity: String, reason: String },

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("undefined R²: {0}")]
    UndefinedRSquared(String),

    #[error("distortion undefined for group {group}: prototype Pi value is {value}")]
    DistortionUndefined { group: usize, value: f64 },

    #[error("reference selection failed: {0}")]
    ReferenceSelection(String),

    #[error("division by zero prediction factor")]
    ZeroPredictionFactor,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("invalid split: {0}")]
    Split(String),

    #[error("invalid feature: {0}")]
    InvalidFeature(String),

    #[error("singular mechanism: {0}")]
    SingularMechanism(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error in {source_name} (row {row}, column {column}): {message}")]
    Parse {
        source_name: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by unreadable or malformed input files, as opposed
    /// to well-formed input that violates a domain rule.
    pub fn is_io_or_parse(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Parse { .. } | Error::Format(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
