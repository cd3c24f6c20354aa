use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("SVD did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    /// A problem instance fails one of its structural invariants.
    #[error("instance invariant violated: {0}")]
    InstanceInvariant(String),

    /// An internal invariant of an algorithm did not hold.
    #[error("invariant breach: {0}")]
    InvariantBreach(String),

    #[error("residual drift {drift:.3e} exceeds bound {bound:.3e} at iteration {iter}")]
    ResidualDrift { iter: usize, drift: f64, bound: f64 },

    #[error("iterate became non-finite at iteration {iter}")]
    Divergence { iter: usize },

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(
        op: &'static str,
        expected: impl std::fmt::Display,
        got: impl std::fmt::Display,
    ) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// True for errors that signal a broken internal invariant rather than
    /// bad input.
    pub fn is_invariant_breach(&self) -> bool {
        matches!(
            self,
            Error::InvariantBreach(_) | Error::ResidualDrift { .. } | Error::Divergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
