use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    /// A rejection sampler ran out of trials.
    #[error("{sampler}: no acceptance within {trials} trials")]
    TrialCap { sampler: &'static str, trials: usize },

    /// An acceptance ratio exceeded one, i.e. the envelope did not dominate.
    #[error("{sampler}: acceptance ratio {ratio} exceeds 1")]
    BoundViolation { sampler: &'static str, ratio: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(String),

    /// A per-observation update failed.
    #[error("observation {index}: {source}")]
    AtObservation { index: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
