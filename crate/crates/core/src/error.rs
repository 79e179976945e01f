use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bracket [{lo}, {hi}] does not straddle the root (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracketing {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// Exhaustive enumeration requested beyond its supported size.
    #[error("capacity exceeded: {what} is {size}, limit {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    /// Galton-Watson sampling exceeded the vertex budget.
    #[error("vertex budget of {max_vertices} exceeded while growing level {level} ({vertices} vertices)")]
    Overflow {
        level: usize,
        vertices: usize,
        max_vertices: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
