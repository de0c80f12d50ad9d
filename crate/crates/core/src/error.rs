use thiserror::Error;

use crate::lattice::Spectrum;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectral data: {0}")]
    InvalidSpectralData(String),

    #[error("duplicate eigenvalue: lambda_{i} = lambda_{j}")]
    DuplicateEigenvalue { i: usize, j: usize },

    #[error("shift mu^({t}) coincides with eigenvalue lambda_{index}")]
    ShiftCollision { t: usize, index: usize },

    #[error("shift mu^({t}) is zero, so delta = -1/mu is undefined")]
    ZeroShift { t: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// A Hankel determinant `H_k^{(s,t)}` with `1 <= k <= m` vanished where a
    /// solution formula needs it.
    #[error("singular configuration: H_{k}^({s},{t}) = 0")]
    SingularConfiguration { k: usize, s: usize, t: usize },

    /// Division by a zero pivot or a zero dLV denominator during a sweep.
    #[error("breakdown at index {index}")]
    Breakdown { index: usize },

    #[error("no convergence after {} iterations", .partial.iterations)]
    NonConvergence { partial: Box<Spectrum> },

    #[error("zero pivot at index {index}")]
    ZeroPivot { index: usize },

    #[error("matrix is not symmetrizable: sub_{index} * super_{index} <= 0")]
    NotSymmetrizable { index: usize },

    #[error("zero vector")]
    ZeroVector,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("trace has {iterations} iterations, at least {required} needed")]
    InsufficientTrace { iterations: usize, required: usize },

    /// An identity that must hold exactly did not. Always an arithmetic bug.
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
