use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coordinate {value} outside [0, 1]")]
    Domain { value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge (residual {residual:e})")]
    NonConvergence { what: &'static str, residual: f64 },

    #[error("non-finite state at step {step} (t = {time})")]
    BlowUp { step: u64, time: f64 },

    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),

    #[error("at least two replicas are required, got {0}")]
    InsufficientReplicas(usize),

    #[error("algebraic connectivity must be positive, got {0}")]
    DegenerateConnectivity(f64),

    #[error("step size underflow near t = {time}: local error {error:e} stays above tolerance")]
    Accuracy { time: f64, error: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
