//! Error type shared by every module.

use thiserror::Error;

/// Failures surfaced by the library. Infinite rates and CGF values are
/// *values* ([`crate::ExtReal::PosInf`]), never errors.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters rejected by a law constructor or a set descriptor.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A vector argument does not match the reward dimension of the law.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// Too few samples for an empirical estimator.
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    /// A trajectory exceeded the renewal guard.
    #[error("runaway trajectory: more than {0} renewals before the horizon")]
    Runaway(u64),
    /// Malformed input file or configuration.
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
