use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate world plane: h' must be non-zero")]
    DegeneratePlane,

    #[error("degenerate normal: |n_z| = {0:e} is below the allowed minimum")]
    DegenerateNormal(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("expansion region is empty")]
    EmptyRegion,

    #[error("pairwise table ({i}, {j}) violates submodularity by {excess:e}")]
    NotSubmodular { i: usize, j: usize, excess: f64 },

    #[error("evaluation mask is empty")]
    EmptyMask,

    #[error("PFM parse error at byte {offset}: {message}")]
    Pfm { offset: usize, message: String },

    #[error("unsupported PFM format {0:?}: only grayscale \"Pf\" is supported")]
    UnsupportedPfm(String),

    #[error("cost volume: {0}")]
    CostVolume(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
