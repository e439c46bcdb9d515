use thiserror::Error;

/// Errors raised by the solvers, samplers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("singular multiplier at mode {mode} (lambda = {lambda})")]
    SingularMultiplier { mode: usize, lambda: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation unsupported for the abstract basis: {0}")]
    UnsupportedBasis(&'static str),

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no compact prefix reaches tail bound {eps_tail} (best certificate {best})")]
    InfeasibleTruncation { eps_tail: f64, best: f64 },

    #[error(
        "fixed-point step failed at t = {time} (dt = {dt}): residual {residual:e} after {iterations} iterations"
    )]
    StepFailure {
        time: f64,
        dt: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("insufficient data: need {needed} valid rows, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
