use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model failed validation:\n{0}")]
    InvalidModel(ValidationReport),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),

    #[error("candidate explosion: {count} deterministic selectors exceed the limit of {limit}")]
    CandidateExplosion { count: u128, limit: usize },

    #[error("decomposition infeasible: candidate performance vectors do not span the target")]
    DecompositionInfeasible,

    #[error("enumeration guard: {count} deterministic policies exceed the limit of {limit}")]
    EnumerationGuard { count: u128, limit: u128 },

    #[error("invalid layer assignment: {0}")]
    Layers(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
