//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by geometry, density, spectral, ridge, synth and
/// experiment operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operation requires a nonempty point cloud")]
    EmptyPointCloud,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite coordinate encountered")]
    NonFinite,

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    #[error("gap degenerate: eigengap is zero, perturbation bound undefined")]
    GapDegenerate,

    #[error("Hessian derivative not available; re-evaluate with with_hprime set")]
    MissingHprime,

    #[error("density underflow at {at:?}")]
    DensityUnderflow { at: Vec<f64> },

    #[error("empty mesh after denoising: every mesh point fell below the density threshold")]
    EmptyMeshAfterDenoise,

    #[error("integral curve was truncated at max_len before converging")]
    TruncatedCurve,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
