use thiserror::Error;

/// Errors raised by the laboratory routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("radius function is not finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("center spacing {spacing} is coarser than the required {required}")]
    CoarseSampling { spacing: f64, required: f64 },

    #[error("intervals overlap near {at}")]
    Overlap { at: f64 },

    #[error("set extends {overhang} beyond the grid extent")]
    OutsideDomain { overhang: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("aliasing detected: tail mass {tail_mass:e} exceeds {limit:e}; use a finer grid")]
    Aliasing { tail_mass: f64, limit: f64 },

    #[error("grid cannot resolve the construction: need N >= {required_n}")]
    Unresolved { required_n: usize },

    #[error("hypothesis r >= rho(|x|) violated: r = {r}, rho(|x|) = {rho}")]
    CoverHypothesis { r: f64, rho: f64 },

    #[error("the zero function has no uncertainty defect")]
    ZeroFunction,

    #[error("no violation of the compatibility condition found up to t = {t_max}")]
    NoViolation { t_max: f64 },

    #[error("empty probe set")]
    EmptyProbes,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error in `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
