//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation.
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// An operation argument was outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two distributions had mismatched lengths.
    #[error("shape mismatch: expected {expected} bins, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// A scenario spec file could not be parsed.
    #[error("spec parse error at line {line}: {reason}")]
    SpecParse { line: usize, reason: String },

    /// Bisection could not bracket or reach the calibration target.
    #[error("calibration target {target} unreachable in [{lo}, {hi}]: {reason}")]
    Calibration {
        target: f64,
        lo: f64,
        hi: f64,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
