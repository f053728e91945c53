use thiserror::Error;

/// Errors raised by the library. Mathematical verdicts (a condition failing,
/// a matrix not being PSD) are reported through result values, not errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("index ({i}, {j}) out of range for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, dim: usize },
    #[error("matrix is not Hermitian: max |H - H^+| = {defect:e}")]
    NotHermitian { defect: f64 },
    #[error("matrix has eigenvalue {min_eigenvalue:e} below the PSD slack")]
    NegativeEigenvalue { min_eigenvalue: f64 },
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("invalid block spec: {0}")]
    InvalidBlockSpec(String),
    #[error("invalid map spec: {0}")]
    InvalidMapSpec(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("trace normalization mismatch: expected {expected}, found {found}")]
    TraceMismatch { expected: f64, found: f64 },
    #[error("optimality requires |z_ij| = 1; violated at block pairs {pairs:?}")]
    NonUnitPhases { pairs: Vec<(usize, usize)> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(op: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        op,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
