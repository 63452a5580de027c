use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin: two_j = {two_j}, two_m = {two_m}")]
    InvalidSpin { two_j: i64, two_m: i64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("sequence length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("auxiliary integration hit |sin lambda| < {eps} at t = {t}")]
    Singularity { t: f64, eps: f64 },

    #[error("non-finite value encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("argument out of range: {0}")]
    OutOfRange(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singularity { .. } | Error::NonFinite { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
