//! Error types shared across the crate.

use thiserror::Error;

/// Coarse error category used by callers (e.g. the CLI) to map failures to
/// exit codes without matching on every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Input data failed validation or parsing.
    Validation,
    /// Parameters or configuration were inconsistent.
    Configuration,
    /// Everything else (numerical failures, I/O, bugs).
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shift {shift} for series of length {len}")]
    InvalidShift { shift: isize, len: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty cluster")]
    EmptyCluster,

    #[error("invalid cluster count {k}: {reason}")]
    InvalidK { k: usize, reason: String },

    #[error("beta_cv is degenerate: intercluster coefficient of variation is zero")]
    DivisionDegenerate,

    /// No stable cluster count was found; carries the full curve so callers
    /// can inspect it. Entries are `(k, beta_cv)`; `None` marks a k for
    /// which beta_cv was degenerate.
    #[error("no stable cluster count found in beta_cv curve {curve:?}")]
    NoElbow { curve: Vec<(usize, Option<f64>)> },

    #[error("invalid monitoring period {0}")]
    InvalidPeriod(usize),

    #[error("invalid score {0}: scores must be non-negative")]
    InvalidScore(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid training set: {0}")]
    InvalidTrainingSet(String),

    #[error("remaining interest undefined: series has zero total")]
    UndefinedRi,

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("invalid regression target: {0}")]
    InvalidTarget(String),

    #[error("normal equations are rank deficient even after ridge fallback")]
    RankDeficient,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            Validation(_) | Parse { .. } | InvalidInput(_) | InvalidTrainingSet(_)
            | DegenerateSeries(_) | LengthMismatch { .. } => ErrorCategory::Validation,
            Config(_) | InvalidK { .. } | InvalidShift { .. } | InvalidPeriod(_)
            | InvalidScore(_) | InvalidTarget(_) | InsufficientData(_) => {
                ErrorCategory::Configuration
            }
            _ => ErrorCategory::Internal,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
