use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} ({left} vs {right})")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("shape mismatch: {context} ({left:?} vs {right:?})")]
    ShapeMismatch {
        context: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("need at least {required} samples, got {actual}")]
    InsufficientSamples { required: usize, actual: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e} exceeds {tolerance:.3e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:.6e} below -{tolerance:.6e})")]
    NotPositiveSemiDefinite { eigenvalue: f64, tolerance: f64 },

    #[error("eigenvalue iteration failed to converge")]
    EigenConvergence,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero-norm row at index {0} cannot be L2-normalized")]
    ZeroNormRow(usize),

    #[error("reference set has {actual} rows, fewer than k = {k}")]
    ReferenceTooSmall { k: usize, actual: usize },

    #[error("image {height}x{width} too small: {context}")]
    ImageTooSmall {
        height: usize,
        width: usize,
        context: String,
    },

    #[error("unsupported array rank {0} (expected 2 or 3)")]
    WrongRank(usize),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
