use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed text input; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A value violates a domain invariant (label range, sentinel pairing, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration or parameter is out of its allowed range.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("sequence is empty after alignment: {0}")]
    EmptySequence(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The input admits no meaningful result (no mass, no scorable frames, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("training diverged at fold {fold}, epoch {epoch}, step {step}: loss = {loss}")]
    Divergence {
        fold: usize,
        epoch: usize,
        step: usize,
        loss: f64,
    },

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

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than a
    /// runtime failure.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::Config(_)
                | Error::EmptySequence(_)
                | Error::Shape(_)
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
