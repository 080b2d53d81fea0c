use thiserror::Error;

/// Errors produced by the localex pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameter value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV input; `line` is 1-based.
    #[error("CSV parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Input unsuitable for triangulation or circumcircle computation.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Rejection sampling exhausted its attempt budget.
    #[error(
        "low acceptance rate: {accepted}/{requested} points accepted after {attempts} attempts \
         (rate {rate:.4})"
    )]
    LowAcceptance {
        accepted: usize,
        requested: usize,
        attempts: usize,
        rate: f64,
    },

    /// A property function produced a non-finite value.
    #[error("property function `{name}` evaluated to a non-finite value")]
    NonFiniteProperty { name: String },

    #[error("design matrix is empty")]
    EmptyDesign,

    /// Serialized model or shape does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// Metric undefined because the reference values have no variance.
    #[error("target variance is zero; R^2 is undefined")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
