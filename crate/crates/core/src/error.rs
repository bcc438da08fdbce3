use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("label count underflow at label {label}: sample is not part of these counts")]
    CountUnderflow { label: usize },

    #[error("allocation power {rho} is undefined for label {label} with zero occurrences")]
    UndefinedPower { rho: f64, label: usize },

    #[error("target distribution with rho > 0 needs at least one label occurrence")]
    EmptyCounts,

    #[error("smoothing constant {0} outside (0, 1e-3]")]
    InvalidEpsilon(f64),

    #[error("cannot remove {requested} samples from a memory of {available}")]
    RemovalOutOfRange { requested: usize, available: usize },

    #[error("memory of {memory} samples split across {tasks} tasks leaves a task with zero quota")]
    QuotaZero { memory: usize, tasks: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("window starts are not in ascending order at position {0}")]
    Unsorted(usize),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("label groups do not partition labels 0..{labels}: {reason}")]
    NotAPartition { labels: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
