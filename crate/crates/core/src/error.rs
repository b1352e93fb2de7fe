use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FccError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("degenerate Fréchet mean: {0}")]
    DegenerateMean(String),

    #[error("Karcher iteration did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    Convergence { iterations: usize, gradient_norm: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The sample Fréchet variance of the response is (numerically) zero.
    #[error(
        "degenerate response: sample Fréchet variance {0:e} is not positive; \
         the coefficient requires V_F > 0"
    )]
    DegenerateResponse(f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("degenerate diagnostic: {0}")]
    DegenerateDiagnostic(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl FccError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FccError::InvalidInput(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        FccError::Geometry(msg.into())
    }

    /// True for the errors that signal a degenerate statistic rather than bad input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            FccError::DegenerateResponse(_)
                | FccError::DegenerateDiagnostic(_)
                | FccError::DegenerateMean(_)
        )
    }
}

pub type Result<T, E = FccError> = std::result::Result<T, E>;
