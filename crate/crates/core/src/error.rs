use thiserror::Error;

/// Errors produced by the core numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error(
        "rank-deficient input: smallest singular value {smallest:.3e} \
         is not above 1e-10 of the largest {largest:.3e}"
    )]
    RankDeficient { smallest: f64, largest: f64 },

    #[error(
        "whitening failed: sigma_r(B) = {sigma_r:.3e} <= 1e-10 * sigma_1(B) = {sigma_1:.3e}; \
         the signal is too weak to whiten"
    )]
    WhiteningFailed { sigma_r: f64, sigma_1: f64 },

    #[error("combinatorial guard exceeded: C({p}, {k}) = {count} supports, limit {limit}")]
    CombinatorialGuard {
        p: usize,
        k: usize,
        count: u64,
        limit: u64,
    },

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
