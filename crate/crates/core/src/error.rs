use crate::linalg::PsdReport;

/// Errors reported by the laboratory.
///
/// The categories follow the failure modes of the numerical operations:
/// malformed caller input, mathematically out-of-domain requests, failed
/// positivity certificates, mismatched Gram data, and numerical breakdown
/// inside an iteration.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// The caller handed over structurally invalid data (wrong shapes,
    /// non-finite entries, duplicate points, empty collections, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The request is well-formed but leaves the mathematical domain of the
    /// operation (point outside the open ball, singular trailing block, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix that must be positive semidefinite failed the eigenvalue
    /// test; the attached report carries the evidence.
    #[error(
        "{context}: matrix is not positive semidefinite \
         (min eigenvalue {:.6e}, tolerance {:.6e})",
        .report.min_eigenvalue,
        .report.tolerance_used
    )]
    NotPsd {
        context: &'static str,
        report: PsdReport,
    },

    /// Source and target vectors handed to the isometry extension do not
    /// have matching Gram matrices.
    #[error(
        "gram mismatch: largest deviation {max_deviation:.6e} exceeds tolerance {tolerance:.6e}"
    )]
    GramMismatch {
        max_deviation: f64,
        tolerance: f64,
    },

    /// An iteration failed to converge or produced non-finite values.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
