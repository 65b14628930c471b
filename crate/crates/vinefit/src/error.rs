use thiserror::Error;

/// Errors surfaced by the estimation and data-handling layers.
#[derive(Error, Debug)]
pub enum VinefitError {
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("need at least {need} variables, got {got}")]
    TooFewVariables { need: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("value {value} at row {row}, column {col} is outside the open interval (0,1)")]
    OutsideUnitInterval { row: usize, col: usize, value: f64 },

    #[error("vectors have mismatched lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("rank variance is zero; correlation undefined")]
    ZeroRankVariance,

    #[error("parameter {value} outside the valid range for {family}")]
    ParameterOutOfRange { family: String, value: f64 },

    #[error("tau {0} is not attainable by any supported family")]
    TauOutOfRange(f64),

    #[error("quadratic program infeasible")]
    QpInfeasible,

    #[error("quadratic program hit the iteration guard")]
    QpMaxIterations,

    #[error("empirical covariance is singular; data degenerate")]
    SingularCovariance,

    #[error("invalid vine structure: {0}")]
    InvalidStructure(String),

    #[error("unknown estimator tag {0:?}")]
    UnknownEstimator(String),

    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),

    #[error("cell {row},{col} is not numeric: {text:?}")]
    NonNumericCell { row: usize, col: usize, text: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VinefitError>;
