use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the analytic and simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{func}: argument outside domain ({detail})")]
    Domain { func: &'static str, detail: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("root search failed: {0}")]
    RootSearch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected} antennas, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    /// True for failures of an iterative numeric method rather than bad input.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(self, Error::Quadrature(_) | Error::RootSearch(_))
    }
}
