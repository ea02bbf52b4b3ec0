use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TulaError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("chain diverged: non-finite iterate at step {step}")]
    Divergence { step: usize },

    #[error("moment E|x|^{order} does not exist (tail index {tail_index})")]
    MomentDoesNotExist { order: f64, tail_index: f64 },

    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, TulaError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(TulaError::InvalidArgument(msg.into()))
}
