use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("weights sum to {0}, not 1")]
    Normalization(String),
    #[error("index out of range: {0}")]
    Range(String),
    #[error("kernel is not reversible (max defect {0:e})")]
    NotReversible(f64),
    #[error("second eigenvalue {0} is negative beyond tolerance")]
    NegativeEigenvalue(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("budget exceeded: {needed} evaluations needed, budget is {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("refused: {0}")]
    Refused(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
