use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("matrix is ill-conditioned (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("search direction is stationary (|Ag| = 0)")]
    StationaryDirection,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
