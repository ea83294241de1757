//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("duplicate object id {0}")]
    DuplicateId(u64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty allocation: stratum {0} was allotted zero samples")]
    EmptyAllocation(usize),

    #[error("allocation infeasible: {0}")]
    InfeasibleAllocation(String),

    #[error("insufficient training data: need at least {need}, got {got}")]
    InsufficientTraining { need: usize, got: usize },

    #[error("degenerate class balance: {0}")]
    DegenerateClassBalance(String),

    #[error("degenerate adjustment; classifier no better than chance (tpr - fpr = {0:.4})")]
    DegenerateAdjustment(f64),

    #[error("too few samples in stratum: need at least 2, got {0}")]
    TooFewStratumSamples(usize),

    #[error("no feasible stratification: {0}")]
    NoFeasibleStratification(String),

    #[error("missing noise entry for id {0}")]
    MissingNoiseEntry(u64),

    #[error("invalid budget: {0}")]
    InvalidBudget(String),

    #[error("csv error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures that signal an estimator cannot produce a
    /// meaningful result on this input (as opposed to bad configuration).
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegenerateAdjustment(_)
                | Error::DegenerateClassBalance(_)
                | Error::NoFeasibleStratification(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
