//! Error type shared by every module of the core crate.

use thiserror::Error;

/// Errors raised by graph construction, numerics and simulation entry points.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A deterministic graph family produced something that is not a valid graph.
    #[error("graph construction failed: {0}")]
    Construction(String),

    /// A randomised construction did not succeed within its retry budget.
    #[error("retries exhausted after {attempts} attempts: {reason}")]
    RetryExhausted { attempts: usize, reason: String },

    /// Degree inflation could not find enough dummy targets.
    #[error("degree inflation failed at vertex {vertex}: needs {needed} targets within distance {radius}, found {found}")]
    Inflation { vertex: usize, needed: usize, radius: usize, found: usize },

    /// An operation that needs a regular graph was handed an irregular one.
    #[error("graph is not regular (degrees range over {min}..={max})")]
    NotRegular { min: usize, max: usize },

    /// A problem is larger than the configured cap of a dense or exact method.
    #[error("{what} has size {size}, above the cap {cap}")]
    CapExceeded { what: String, size: usize, cap: usize },

    /// An eigensolver or other numerical kernel failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A time argument falls outside the sampled horizon.
    #[error("interval [{start}, {end}] outside horizon {horizon}")]
    Range { start: f64, end: f64, horizon: f64 },

    /// Reading or parsing a graph file failed.
    #[error("graph file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
