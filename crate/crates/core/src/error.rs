use thiserror::Error;

/// Errors raised by parameter validation, the simulation engines, the
/// estimators and the exact solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("initial configurations are not nested: site {site} is in the lower set but not in the upper set")]
    NotNested { site: i64 },

    #[error("no replica satisfied the conditioning event ({event}) out of {replicas}")]
    DegenerateConditioning { event: String, replicas: u64 },

    #[error("ring size {0} outside the supported range 2..=14")]
    RingTooLarge(usize),

    #[error("site {site} is not a label of the ring with {n} sites")]
    SiteOutsideRing { site: i64, n: usize },

    #[error("uniformization did not converge within {cap} terms (rate {rate}, horizon {t})")]
    NoConvergence { cap: usize, rate: f64, t: f64 },

    #[error("fixture file: {0}")]
    Fixture(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
