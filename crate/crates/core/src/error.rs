//! Error and problem-validation types shared across the crate.

use thiserror::Error;

/// A single structural defect found while validating an [`crate::LpProblem`].
///
/// Validation reports every violation it finds rather than stopping at the
/// first, so callers can surface a complete diagnosis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A vector has the wrong length for the dimensions implied by the
    /// objective and constraint matrices.
    LengthMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    /// A matrix has the wrong number of columns.
    ColumnMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },
    /// A NaN was found in a numeric field.
    NotANumber { field: &'static str, index: usize },
    /// An infinity was found in a field that must be finite.
    NotFinite { field: &'static str, index: usize },
    /// `lower[i] > upper[i]` (or a bound pinned at the wrong infinity).
    CrossedBounds { index: usize },
    /// Equality and inequality matrices use different storage formats.
    MixedStorage,
    /// A sparse matrix fails its structural invariants (row pointers,
    /// column ordering, explicit zeros).
    MalformedSparse { field: &'static str, detail: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::LengthMismatch {
                field,
                expected,
                actual,
            } => write!(
                f,
                "{field} length mismatch: expected {expected}, got {actual}"
            ),
            Violation::ColumnMismatch {
                field,
                expected,
                actual,
            } => write!(
                f,
                "{field} column mismatch: expected {expected}, got {actual}"
            ),
            Violation::NotANumber { field, index } => write!(f, "NaN in {field} at index {index}"),
            Violation::NotFinite { field, index } => {
                write!(f, "non-finite value in {field} at index {index}")
            }
            Violation::CrossedBounds { index } => write!(f, "crossed bounds at index {index}"),
            Violation::MixedStorage => {
                write!(f, "equality and inequality matrices use different storage")
            }
            Violation::MalformedSparse { field, detail } => {
                write!(f, "malformed sparse matrix in {field}: {detail}")
            }
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {}", format_violations(.0))]
    InvalidProblem(Vec<Violation>),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("batch shape mismatch at instance {index}")]
    BatchShapeMismatch { index: usize },

    #[error("warm start list length {actual} does not match batch length {expected}")]
    WarmStartLengthMismatch { expected: usize, actual: usize },

    #[error("inner solve for batch member {index} did not reach optimality (status {status})")]
    InnerSolveFailed { index: usize, status: &'static str },

    #[error("normalized regret is undefined: zero aggregate optimal objective")]
    UndefinedMetric,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
