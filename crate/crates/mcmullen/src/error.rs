//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (zero input to a
    /// derivative, degree below 3, lambda = 0, and so on).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solve (Newton, Aberth, continuation) did not reach the
    /// requested residual.
    #[error("no convergence in {what}: residual {residual:e}")]
    NonConvergence { what: String, residual: f64 },

    /// Branch tracking along a path could not be disambiguated even after
    /// refinement; the caller must supply a finer or different path.
    #[error("branch continuation failed: {0}")]
    Branch(String),

    /// A stated precondition of the operation does not hold for the inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A grid or sample set is too coarse to answer the query.
    #[error("resolution too coarse: {0}")]
    Resolution(String),

    /// An input collection that must be non-empty was empty.
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn branch(msg: impl Into<String>) -> Self {
        Error::Branch(msg.into())
    }

    pub fn no_convergence(what: impl Into<String>, residual: f64) -> Self {
        Error::NonConvergence {
            what: what.into(),
            residual,
        }
    }
}
