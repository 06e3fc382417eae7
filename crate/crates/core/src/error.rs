use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    InvalidSample { line: usize, reason: String },

    #[error("sample set is empty")]
    EmptySamples,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The transform passes too close to zero for its logarithm to be tracked.
    #[error("transform is numerically zero near y = {y}; logarithm cannot be tracked")]
    NearZeroTransform { y: f64 },

    #[error("domain event failed: {0}")]
    DomainEventFailed(&'static str),

    #[error("grid step {step} is too coarse for w = {w} (phase advance {phase} > {bound})")]
    GridTooCoarse {
        step: f64,
        w: f64,
        phase: f64,
        bound: f64,
    },

    #[error("grid would need {needed} points, budget is {budget}")]
    Capacity { needed: usize, budget: usize },

    #[error("no qualifying increments")]
    EmptyResult,
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
