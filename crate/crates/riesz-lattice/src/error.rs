use thiserror::Error;

/// Errors produced by series evaluation, quadrature and kernel construction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time parameter must be strictly positive, got {0}")]
    NonpositiveTime(f64),
    #[error("series tolerance not reached within {max_terms} terms (best bound {best:e})")]
    SeriesTruncation { max_terms: usize, best: f64 },
    #[error("quadrature failed to converge: {0}")]
    QuadratureNonconvergence(String),
    #[error("invalid kernel index ({j},{k}) for dimension {d}")]
    InvalidIndices { j: usize, k: usize, d: usize },
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("kernel family requires d = 2, got {0}")]
    NotPlanar(usize),
    #[error("kernel undefined at the origin")]
    OriginArgument,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
