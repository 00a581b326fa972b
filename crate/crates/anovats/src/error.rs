//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by panel ingestion, the test machinery, preprocessing,
/// and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV content. `line` is the 1-based line number in the file,
    /// counting the header.
    #[error("CSV error at line {line}: {message}")]
    Csv { line: usize, message: String },

    /// A caller-supplied argument or configuration value is out of range or
    /// inconsistent with the data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested procedure cannot run on this data (too few groups,
    /// too few time points, missing values where a complete panel is needed).
    #[error("inapplicable: {0}")]
    Inapplicable(String),

    /// A numerical procedure failed (non-stationary fit, exploding variance
    /// recursion, non-positive-definite matrix).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
