use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or frame shapes are incompatible for the requested operation.
    #[error("shape mismatch in {context}: {detail}")]
    Shape { context: &'static str, detail: String },

    /// A convolution spec violates its own invariants.
    #[error("invalid conv spec: {0}")]
    Spec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("weight file error at layer `{layer}`: {reason}")]
    Weights { layer: String, reason: String },

    #[error("missing history entry for time index {0}")]
    MissingHistory(usize),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn weights(layer: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Weights {
            layer: layer.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
