use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Declared membership of a cochain in the nested spaces `N ⊂ C ⊂ D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CochainClass {
    /// No vanishing condition.
    D,
    /// Vanishes when any argument after the first is the identity.
    C,
    /// Vanishes when any argument is the identity.
    N,
}

impl fmt::Display for CochainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CochainClass::D => "D",
            CochainClass::C => "C",
            CochainClass::N => "N",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: |M[{row},{col}] - conj(M[{col},{row}])| = {deviation:e}")]
    NotHermitian {
        deviation: f64,
        row: usize,
        col: usize,
    },

    #[error("matrix norm {norm:e} exceeds the exponential cap {cap:e}")]
    Overflow { norm: f64, cap: f64 },

    #[error("bad exponent: {0}")]
    BadExponent(String),

    #[error("bad exponents: alpha + beta = {sum} must be < 1")]
    BadExponents { sum: f64 },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("tuple sum needs {terms:e} terms, over the budget of {cap:e}")]
    ComplexityCap { terms: f64, cap: f64 },

    #[error("class violation: cochain declared {declared} but {detail}")]
    ClassViolation {
        declared: CochainClass,
        detail: String,
    },

    #[error("no convergence in {what}: {detail}")]
    NoConvergence { what: String, detail: String },

    #[error("validation failed: {0}")]
    ValidationFailure(String),

    #[error("element {index} is not zero-momentum: ||[P, a]|| = {residual:e}")]
    ZeroMomentumViolation { index: usize, residual: f64 },

    #[error("P is not fixed along the family: lambda = {lambda}, ||P(lambda) - P(lambda0)|| = {residual:e}")]
    PNotFixed { lambda: f64, residual: f64 },

    #[error("element is not invariant: {0}")]
    NotInvariant(String),

    #[error("group index {index} out of range for a group of order {order}")]
    GroupIndex { index: usize, order: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Non-convergence is reported separately from malformed input by the CLI.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Overflow { .. })
    }

    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ValidationFailure(_)
                | Error::NotHermitian { .. }
                | Error::ClassViolation { .. }
                | Error::ZeroMomentumViolation { .. }
                | Error::PNotFixed { .. }
                | Error::NotInvariant(_)
        )
    }
}
