use thiserror::Error;

/// Errors raised by the rate-region library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid transmit strategy: {0}")]
    InvalidStrategy(String),

    #[error("negative transmit power {value} for user {user}")]
    NegativePower { user: usize, value: f64 },

    #[error("phase of channel coefficient {0} is undefined (zero magnitude)")]
    UndefinedPhase(&'static str),

    #[error("cannot branch a degenerate box")]
    CannotBranch,

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
