use thiserror::Error;

/// Errors produced by the model, the solvers and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("miner index {index} out of range for {len} miners")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("total demand must be strictly positive")]
    ZeroTotalDemand,

    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("need at least {required} miners, got {got}")]
    TooFewMiners { required: usize, got: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("price of miner {index} is {price}, must lie in ({min}, {max}]")]
    PriceOutOfRange {
        index: usize,
        price: f64,
        min: f64,
        max: f64,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
