use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A forward pass or update produced NaN or infinity.
    #[error("numeric divergence at layer {layer}{}", step.map(|s| format!(", step {s}")).unwrap_or_default())]
    Divergence { layer: usize, step: Option<usize> },

    #[error("cannot build network: {0}")]
    Build(String),

    #[error("cannot ingest {}: expected {expected} bytes{}", path.display(), found.map(|f| format!(", found {f}")).unwrap_or_default())]
    Ingestion {
        path: PathBuf,
        expected: String,
        found: Option<u64>,
    },

    #[error("runs cannot be aggregated; fields differ: {}", fields.join(", "))]
    Aggregation { fields: Vec<String> },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shapes(what: &str, left: &[usize], right: &[usize]) -> Self {
        Error::Dimension(format!("{what}: {left:?} vs {right:?}"))
    }
}
