use thiserror::Error;

use crate::chebpoly::BoundReport;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// No polynomial within the degree budget meets the requested bounds.
    #[error("no degree <= {max_degree} meets the step bounds (best degree {best_degree}: {best_report})")]
    Capacity {
        max_degree: usize,
        best_degree: usize,
        best_report: BoundReport,
    },

    /// A constructed object failed its own consistency check.
    #[error("construction error: {0}")]
    Construction(String),

    /// Malformed text input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(message: impl Into<String>) -> Result<T> {
    Err(Error::Domain(message.into()))
}
