use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("expected {expected} entries, got {actual}")]
    EntryCount { expected: usize, actual: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not unitary (max deviation of U^dag U from I is {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("square root of negative eigenvalue {eigenvalue:e}")]
    Negativity { eigenvalue: f64 },

    #[error("states do not commute (commutator max-entry norm {norm:e})")]
    NonCommuting { norm: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("visibility {visibility} < 1 cannot be inverted in truncated mode; use exact mode")]
    ModeMismatch { visibility: f64 },

    #[error("phase grid is degenerate: {0}")]
    DegenerateGrid(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
