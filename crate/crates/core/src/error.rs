use thiserror::Error;

use crate::chicap::CapacityResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series diverges: {0}")]
    Divergent(String),
    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("constraint outside the solvable branch: {0}")]
    OutOfBranch(String),
    #[error("equation has no solution: {0}")]
    Unsolvable(String),
    #[error("entropy is unbounded on this set")]
    UnboundedEntropy,
    #[error("degenerate state: decrease coefficient {0} is not below 1")]
    DegenerateState(f64),
    #[error("solver did not reach the requested gap after {} iterations (gap {})", .0.iters, .0.gap)]
    MaxIterExceeded(Box<CapacityResult>),
    #[error("state set is empty")]
    EmptySet,
    #[error("matrices do not form a finite group: {0}")]
    NotAGroup(String),
    #[error("sum of exp(-lambda/q_n) diverges for every lambda; capacity is infinite")]
    Condition45Fails,
    #[error("function is not normalized: mean |phi|^2 = {0}")]
    NotNormalized(f64),
    #[error("state lies outside the domain of the projection: Tr P rho = {0}")]
    OutOfDomain(f64),
    #[error("invalid config at `{path}`: {msg}")]
    ConfigInvalid { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short variant name, written to stderr by the command line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Divergent(_) => "Divergent",
            Error::InvalidTolerance(_) => "InvalidTolerance",
            Error::ValidationFailed(_) => "ValidationFailed",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::OutOfBranch(_) => "OutOfBranch",
            Error::Unsolvable(_) => "Unsolvable",
            Error::UnboundedEntropy => "UnboundedEntropy",
            Error::DegenerateState(_) => "DegenerateState",
            Error::MaxIterExceeded(_) => "MaxIterExceeded",
            Error::EmptySet => "EmptySet",
            Error::NotAGroup(_) => "NotAGroup",
            Error::Condition45Fails => "Condition45Fails",
            Error::NotNormalized(_) => "NotNormalized",
            Error::OutOfDomain(_) => "OutOfDomain",
            Error::ConfigInvalid { .. } => "ConfigInvalid",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}
