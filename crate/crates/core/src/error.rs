use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the tracking library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("region does not intersect the map")]
    EmptyRegion,

    #[error("insufficient evidence: {0}")]
    InsufficientEvidence(String),

    #[error("no evidence in residual map")]
    NoEvidence,

    #[error("similarity undefined for zero-norm input")]
    UndefinedSimilarity,

    #[error("no salient colors: {0}")]
    NonSalient(String),

    #[error("no shape candidates")]
    NoCandidates,

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
