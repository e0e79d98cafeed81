use thiserror::Error;

use crate::dynamics::RunRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("malformed edge list: {0}")]
    Format(String),
    #[error("graph is not connected")]
    Disconnected,
    #[error("unknown graph family {0:?} (expected complete, cycle, path, star or random)")]
    UnknownFamily(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("probability {0} is outside [0, 1]")]
    Probability(f64),
    #[error("vertex {j} is not a neighbor of vertex {i}")]
    NotAdjacent { i: usize, j: usize },
    #[error("opinion vector has length {got} but the graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bad opinion character {0:?} (expected '+' or '-')")]
    BadOpinion(char),
    #[error("empty opinion vector")]
    Empty,
    #[error("no absorption within {max_steps} steps")]
    Timeout {
        max_steps: u64,
        partial: Box<RunRecord>,
    },
    #[error("potential increased from {before} to {after} at step {step}")]
    PotentialIncrease { step: u64, before: u64, after: u64 },
    #[error("potential bookkeeping drifted at step {step}: tracked {tracked}, recomputed {actual}")]
    PotentialMismatch { step: u64, tracked: u64, actual: u64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("n = {n} exceeds the enumeration cap of {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("state code {code} out of range for n = {n}")]
    StateRange { code: u32, n: usize },
}

/// Umbrella error for the library's fallible entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
