use crate::network::RowClass;
use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feeder is not a spanning tree rooted at the substation: {0}")]
    DisconnectedFeeder(String),

    #[error("operating polytope is empty (first infeasible row class: {class})")]
    EmptyInterior { class: RowClass },

    #[error("operating polytope is unbounded")]
    UnboundedModel,

    #[error("operating model admits no DER schedule")]
    InfeasibleModel,

    #[error("solver failure: {0}")]
    Solver(#[from] LpError),

    #[error("solver failure at point {index}: {source}")]
    SolverAt {
        index: usize,
        #[source]
        source: LpError,
    },

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("training set is empty")]
    EmptyDataset,

    #[error("training diverged (non-finite loss at step {step})")]
    NonFiniteLoss { step: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("sample pool is empty")]
    EmptyPool,

    #[error("invalid sample count {0}")]
    InvalidCount(usize),

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

impl Error {
    /// True when the error originates from the LP layer.
    pub fn is_solver(&self) -> bool {
        matches!(self, Error::Solver(_) | Error::SolverAt { .. })
    }
}
