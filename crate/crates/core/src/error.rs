use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("buffer failed: {0}")]
    BufferFailure(String),

    #[error("regularization failed: {0}")]
    RegularizationFailure(String),

    #[error("parse error in {what} at {location}: {message}")]
    Parse {
        what: String,
        location: String,
        message: String,
    },

    #[error("unsupported LAS point data format {0} (supported: 0, 1, 6)")]
    UnsupportedPointFormat(u8),

    #[error("triangulation failed: {0}")]
    Triangulation(String),

    #[error("grid domain error: {0}")]
    Domain(String),

    #[error("tile alignment error: {0}")]
    Alignment(String),

    #[error("no points available{}", .id.as_deref().map(|id| format!(" for footprint `{id}`")).unwrap_or_default())]
    NoPoints { id: Option<String> },

    #[error("degenerate height: top {top} must exceed base {base}")]
    DegenerateHeight { base: f64, top: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("scene spec too dense: {0}")]
    SpecTooDense(String),

    #[error("perturbation failed: {0}")]
    Perturbation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        what: impl Into<String>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            what: what.into(),
            location: location.into(),
            message: message.into(),
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
