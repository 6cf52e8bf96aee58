use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("neighbor_max_reduce called with an empty neighborhood (g = 0)")]
    EmptyNeighborhood,

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("non-finite value during {0}")]
    NonFinite(String),

    #[error("cannot select {requested} items from {available}")]
    Count { requested: usize, available: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f32 },

    #[error("blob length mismatch: manifest expects {expected} bytes, found {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unsupported format version {0}")]
    FormatVersion(u32),

    #[error("need at least 2 points for a correlation, got {0}")]
    InsufficientPoints(usize),

    #[error("trace error: {0}")]
    Trace(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::EmptyNeighborhood => "empty_neighborhood",
            Error::LabelOutOfRange { .. } => "label_out_of_range",
            Error::NonFinite(_) => "non_finite",
            Error::Count { .. } => "count",
            Error::InvalidInput(_) => "invalid_input",
            Error::Structural(_) => "structural",
            Error::Diverged { .. } => "diverged",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::FormatVersion(_) => "format_version",
            Error::InsufficientPoints(_) => "insufficient_points",
            Error::Trace(_) => "trace",
            Error::Config(_) => "config",
            Error::MissingFile(_) => "missing_file",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
