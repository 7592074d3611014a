use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by parsing, validation, and the numerical pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input at a specific line of a line-oriented file.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A record field violated a schema invariant.
    #[error("field '{field}': {msg}")]
    Validation { field: String, msg: String },

    /// A referenced sidecar file does not exist.
    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    /// Array or matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Structure notation outside plain nested dot-bracket.
    #[error("unsupported structure notation: {0}")]
    UnsupportedNotation(String),

    /// Normal-equation system is singular (typically at lambda = 0).
    #[error("rank-deficient system: {0}; retry with lambda > 0")]
    RankDeficient(String),

    /// A quantity has no defined value on this input.
    #[error("undefined: {0}")]
    Undefined(String),

    /// Requested split sizes cannot be met.
    #[error("infeasible split targets: {0}")]
    InfeasibleSplit(String),

    /// A prediction required for scoring is absent.
    #[error("missing prediction for construct '{id}' position {position} column '{column}'")]
    MissingPrediction {
        id: String,
        position: usize,
        column: String,
    },

    /// Prediction sets do not cover the same (construct, column, position) grid.
    #[error("coverage mismatch: {0}")]
    CoverageMismatch(String),

    /// A NaN or infinity appeared where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Invalid hyperparameters or run configuration.
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
