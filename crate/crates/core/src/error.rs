use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative decomposition failed to converge.
    #[error("numerical failure: decomposition did not converge (Frobenius norm {norm:e})")]
    NumericalFailure { norm: f64 },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("campaign aborted: {failed} of {trials} trials failed (first failure: {first})")]
    CampaignFailed { failed: usize, trials: usize, first: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
