//! Error types shared across the crate.

use crate::dispersion::Branch;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or dimensionless parameter violates its precondition.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The spectral ratios degenerate (J1 = 0 or beta_ky = 0).
    #[error("degenerate coupling: {0}")]
    DegenerateCoupling(&'static str),

    /// A sideband has negative squared wavenumber on the given branch.
    #[error("evanescent mode at sideband {index}, branch {branch}")]
    EvanescentMode { index: i64, branch: Branch },

    /// The seed system cannot be solved (zero wavenumber or weight).
    #[error("singular seed system: {0}")]
    SingularSeed(String),

    /// The terminal 4x4 system is singular.
    #[error("degenerate terminal system: {0}")]
    DegenerateTerminal(String),

    /// The closed-form minimal solution hit a vanishing interface determinant.
    #[error("degenerate interface determinant at sideband {index}")]
    DegenerateDeterminant { index: i64 },

    /// A matrix that the construction requires to have rank >= 3 does not.
    #[error("internal contradiction: {0}")]
    InternalContradiction(String),

    /// Generic singular linear system outside the cases above.
    #[error("singular linear system: {0}")]
    SingularMatrix(String),

    /// Two coefficient tables cover different sideband index sets.
    #[error("mismatched index sets: {0}")]
    IndexMismatch(String),

    /// Evaluation requested outside the layer's z-domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Wrong number of free constants supplied to the construction.
    #[error("free_coeffs: expected {expected} entries, got {got}")]
    FreeConstantCount { expected: usize, got: usize },

    /// Configuration file problems (parse errors, bad keys, bad values).
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
