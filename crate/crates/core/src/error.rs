use thiserror::Error;

/// Errors returned by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("timestamps must be strictly increasing (index {index})")]
    NonIncreasingTimestamps { index: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("accumulated series decreases at index {index} (counter reset or rollover?)")]
    NonMonotoneCounter { index: usize },
    #[error("negative load {value} at index {index}")]
    NegativeLoad { index: usize, value: f64 },
    #[error("step must be positive, got {0} s")]
    NonPositiveStep(i64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("grid instant {instant} lies outside the data span [{first}, {last}]")]
    OutsideSpan { instant: i64, first: i64, last: i64 },
    #[error("series too short: need {needed}, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("series has zero variance")]
    ConstantSeries,
    #[error("Toeplitz system is numerically singular at order {order}")]
    SingularToeplitz { order: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series are not aligned (start or step differ)")]
    Misaligned,
    #[error("unexpected unit: expected {expected}, got {got}")]
    WrongUnit { expected: &'static str, got: &'static str },
    #[error("ground truth contains zero or negative values at index {index}")]
    NonPositiveTruth { index: usize },
    #[error("dynamic-range offset is zero; MAPE undefined")]
    ZeroDynamicRange,
    #[error("invalid hyper-parameters: {0}")]
    InvalidHyperparams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("ARIMA optimum is non-stationary for order {0}")]
    NonStationary(String),
    #[error("all ARIMA candidate orders failed")]
    AllCandidatesFailed,
    #[error("open-loop forecasting requires the true lagged test rows")]
    MissingTestRows,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
