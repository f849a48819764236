use thiserror::Error;

/// Errors produced by generators, detectors and the benchmark runner.
#[derive(Debug, Error)]
pub enum DriftError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {what} `{value}`")]
    UnknownKind { what: &'static str, value: String },

    #[error("paths live on different grids (expected n = {expected}, got n = {got})")]
    GridMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("time window [{lower}, {upper}) contains no sample points")]
    EmptyWindow { lower: f64, upper: f64 },

    #[error(
        "design matrix is rank deficient ({rank} of {features} features) with ridge_lambda = 0; \
         use ridge_lambda > 0 or reduce the basis degree"
    )]
    RankDeficient { rank: usize, features: usize },

    #[error("series too short: need at least {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("singular regression: {0}")]
    SingularRegression(&'static str),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DriftError>;

pub(crate) fn invalid(msg: impl Into<String>) -> DriftError {
    DriftError::InvalidParameter(msg.into())
}
