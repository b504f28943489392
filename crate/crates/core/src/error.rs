//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violated a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical procedure could not reach its accuracy target.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A truncated mixture failed its distributional invariants.
    #[error("mixture truncation too small: unit-mean residual {achieved:e} exceeds {required:e}")]
    Truncation { achieved: f64, required: f64 },

    /// An iterative solver did not converge.
    #[error("solver failed to converge: residual {residual:e}")]
    Solver { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
