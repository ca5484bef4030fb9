//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by grid validation, operator preconditions, and the
/// time-stepping loop.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid grid or parameter specification.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// An operation was called with a field in the wrong representation.
    #[error("representation mismatch: {0}")]
    Representation(String),

    /// An operator precondition failed (e.g. Biot-Savart with nonzero mean
    /// vorticity).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The solution left the finite range: NaN/Inf appeared or the norm
    /// ceiling was exceeded. Carries the last finite time and H1 norm.
    #[error("solution blew up at t = {t}: {reason} (last finite H1 norm {h1})")]
    BlowUp { t: f64, h1: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, CoreError>;
