use thiserror::Error;

/// Errors produced by the geolab numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The discretized endpoint map does not preserve the uniform measure.
    #[error("map is not measure preserving: column-sum deviation {deviation:.3e} after {samples} samples per cell")]
    NotMeasurePreserving { deviation: f64, samples: usize },

    /// The scaling iteration hit its sweep budget before reaching the marginal tolerance.
    #[error("scaling did not converge at eps={eps:.3e}: {iterations} sweeps, time-marginal violation {time_violation:.3e}, pair violation {pair_violation:.3e}")]
    NotConverged {
        eps: f64,
        iterations: usize,
        time_violation: f64,
        pair_violation: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
