use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A dataset file could not be parsed; carries the 1-based line number.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// A dataset file contained no examples.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// An argument escaped its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative routine failed to converge.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Inconsistent or unsupported configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Posterior and prior families disagree.
    #[error("family mismatch: posterior {posterior} vs prior {prior}")]
    FamilyMismatch { posterior: String, prior: String },

    /// The requested (method, family, class-count) cell has no valid bound.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A conditional bound was requested on an empty example subset.
    #[error("degenerate subset: {0}")]
    DegenerateSubset(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
