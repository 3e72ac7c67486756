use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("no closed-form certificate for n = {n}, kappa = {kappa}")]
    NotImplemented { n: usize, kappa: f64 },

    #[error("consistency system is rank deficient (singular values {singular_values:?})")]
    RankDeficient { singular_values: Vec<f64> },

    #[error("supremum over ell reached the search cap {cap}; widen the cap")]
    CapReached { cap: f64 },

    #[error("atom {index} has cos(alpha) = 0 under a functional dividing by it")]
    InfiniteContribution { index: usize },

    #[error("certificate has not passed verification")]
    Unverified,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
