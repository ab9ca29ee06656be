use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid modulus {n}: {reason}")]
    InvalidModulus { n: u64, reason: &'static str },

    #[error("modulus {0} is degenerate: every point of G_n lies on y = x")]
    DegenerateModulus(u64),

    #[error("{what} = {value} exceeds the limit {limit}")]
    LimitExceeded {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("no prime found below the search bound {0}")]
    SearchExhausted(u64),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("corrupt checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
