use thiserror::Error;

pub type Result<T, E = CbbError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CbbError {
    #[error("context probabilities sum to {sum}, expected 1")]
    ProbabilityMass { sum: f64 },

    #[error("{what} = {value} is outside [0, 1]")]
    Range { what: String, value: f64 },

    #[error("arm {arm} has delay {delay}, delays must be >= 1")]
    Delay { arm: usize, delay: u64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown instance name `{0}`")]
    UnknownName(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("{what}: size {size} exceeds the limit {limit}")]
    TooLarge { what: &'static str, size: f64, limit: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("arm {arm} played at round {t} while blocked")]
    BlockedPlay { arm: usize, t: u64 },

    #[error("extreme point Z({round}) requested before it was computed")]
    HistoryGap { round: u64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
