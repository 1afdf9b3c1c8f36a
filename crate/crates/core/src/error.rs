use thiserror::Error;

/// Errors produced by the tensor algebra and the recovery solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("index {index} out of range for extent {extent}")]
    IndexOutOfRange { index: usize, extent: usize },

    #[error("non-finite value at offset {0}")]
    NonFinite(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spectral tensor is not conjugate-symmetric (relative deviation {0:e})")]
    SpectralAsymmetry(f64),

    #[error("SVD failed to converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    SvdNonConvergence { sweeps: usize, residual: f64 },

    #[error("observation mask is empty")]
    EmptyMask,

    #[error("affinity graph is trivial (all weights zero)")]
    TrivialGraph,

    #[error("not a tensor file: bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported tensor order {0}, expected 3")]
    BadOrder(u8),

    #[error("unknown dtype code {0}")]
    UnknownDtype(u8),

    #[error("dtype mismatch: expected {expected}, file holds {found}")]
    DtypeMismatch { expected: &'static str, found: &'static str },

    #[error("truncated tensor file: need {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("corrupt tensor file: {0}")]
    Corrupt(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
