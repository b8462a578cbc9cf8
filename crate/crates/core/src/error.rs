use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch ({context}): expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not Hermitian: max |A - A^dagger| = {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NegativeEigenvalue { eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    InvalidTrace { trace: f64 },

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("vector lies outside the projector range (residual {residual:e})")]
    OutsideRange { residual: f64 },

    #[error("invalid source ({invariant}): {detail}")]
    InvalidSource { invariant: &'static str, detail: String },

    #[error("dense size {size} exceeds cap {cap}; use the class spectrum path")]
    DenseCapExceeded { size: u128, cap: usize },

    #[error("spectral path infeasible: {0}")]
    SpectralCapExceeded(String),

    #[error("{what} = {value} out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("empty subspace: {0}")]
    EmptySubspace(String),

    #[error("channel is not square ({in_dim} -> {out_dim})")]
    NonSquareChannel { in_dim: usize, out_dim: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
