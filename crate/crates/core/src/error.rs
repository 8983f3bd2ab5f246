use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty support: every log-weight is -inf")]
    EmptySupport,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outcome outside unit ball: round {round} has norm {norm}")]
    OutsideUnitBall { round: usize, norm: f64 },

    #[error("below adaptive range: comparator norm {0} < 1")]
    BelowAdaptiveRange(f64),

    #[error("radius table gap: no rung covers radius {radius} (largest rung {largest})")]
    TableGap { radius: f64, largest: f64 },

    #[error("depth {depth} exceeds exact-enumeration cap {cap}; use the Monte Carlo estimator")]
    DepthTooLarge { depth: usize, cap: usize },

    #[error("game tree budget exceeded: {required} nodes required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("incompatible: {0}")]
    Incompatible(String),

    #[error("matrix game solver failed: {0}")]
    Solver(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
