use thiserror::Error;

/// Errors reported by the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two consecutive releases coincide where a release-forced speed is required.
    #[error("degenerate release: jobs {first} and {next} share release time {release}")]
    DegenerateRelease {
        first: usize,
        next: usize,
        release: f64,
    },

    #[error("infeasible deadline {deadline}: must exceed {bound}")]
    InfeasibleDeadline { deadline: f64, bound: f64 },

    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),

    #[error("{what} did not converge within {iterations} iterations (best value {best})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        best: f64,
    },

    #[error("instance too large: {n} jobs exceeds the enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
