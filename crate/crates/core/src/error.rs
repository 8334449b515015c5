use thiserror::Error;

use crate::record::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// A parse failure at a 1-based data row (0 for the header) and a named column.
    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unsupported format version {0:?}")]
    Version(String),

    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),

    #[error("record {label:?} is invalid: {}", join_violations(.violations))]
    Invalid {
        label: String,
        violations: Vec<Violation>,
    },

    #[error("invalid filter: {0}")]
    Filter(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),

    #[error("singular curve (zero discriminant)")]
    SingularCurve,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("class {class} has {count} samples; at least 2 are required")]
    SmallClass { class: u32, count: usize },

    #[error("label {0} was not seen during fitting")]
    UnseenLabel(u32),

    #[error("empty dataset")]
    Empty,

    #[error("{0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
