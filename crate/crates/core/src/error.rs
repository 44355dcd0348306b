//! Crate-wide error type.

use thiserror::Error;

use crate::imputation::NormalModelState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Source file could not be parsed. Carries the 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Instance cells do not match the schema they are evaluated against.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A configuration value violates its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation that needs data received none.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// An instance with a missing class value reached a supervised operation.
    #[error("instance {row} has a missing class value; apply drop_missing_class first")]
    MissingClass { row: usize },

    /// Cells that must be observed are still missing.
    #[error("attribute '{attribute}' still has missing values; fill or impute before training")]
    MissingCells { attribute: String },

    /// A metric denominator is zero.
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    /// ROC analysis needs both label values present.
    #[error("labels contain a single class; ROC needs at least one positive and one negative")]
    SingleClassLabels,

    /// EM did not reach the requested tolerance. The last state is attached
    /// so the caller can inspect or reuse it.
    #[error("EM did not converge within {iterations} iterations")]
    EmNonConvergence {
        iterations: usize,
        last_state: Box<NormalModelState>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
