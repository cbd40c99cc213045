use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("index {index} out of range for {what} of size {len}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("covariance of {cells} cells exceeds the dense ceiling of {ceiling} cells")]
    Capacity { cells: usize, ceiling: usize },

    #[error("cholesky factorization failed at pivot {pivot} (jitter levels tried: {jitters:?})")]
    Factorization { pivot: usize, jitters: Vec<f64> },

    #[error("design error: {0}")]
    Design(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("packing error: placed {achieved} of {requested} plots ({reason})")]
    Packing {
        achieved: usize,
        requested: usize,
        reason: String,
    },

    #[error("collinear design matrix: column `{column}` is (numerically) a combination of earlier columns")]
    Collinearity { column: String },

    #[error("insufficient sample: n = {n} must exceed p = {p}")]
    InsufficientSample { n: usize, p: usize },

    #[error("transform error: {0}")]
    Transform(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("percent bias undefined: empirical variance is {0}")]
    UndefinedBias(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("{path}: row {row}: {message}")]
    Ingestion {
        path: String,
        row: usize,
        message: String,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user input or configuration rather than by
    /// numerical failure during a run.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Layout(_)
                | Error::InvalidFrame(_)
                | Error::Domain(_)
                | Error::Ingestion { .. }
        )
    }
}
