use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid preference matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid context mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid loss spec: {0}")]
    InvalidLoss(String),

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("exhaustive Kemeny search supports m <= {max}, got m = {m}; lower m")]
    TooManyAlternatives { m: usize, max: usize },

    #[error("non-finite {what} at step {step}")]
    NonFinite { what: &'static str, step: usize },
}
