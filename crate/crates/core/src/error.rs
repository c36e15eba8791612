use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("reference signal vanishes at receiver {index}")]
    DegenerateReference { index: usize },
    #[error("phase offset {phi} rad leaves the measurement matrix singular")]
    SingularOffset { phi: f64 },
    #[error("exhaustive search over {candidates} candidates exceeds budget of {budget}")]
    SearchBudget { candidates: f64, budget: u64 },
    #[error("channel Gram matrix is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
