use thiserror::Error;

/// Errors raised by the geometry, feasibility and configuration layers.
#[derive(Debug, Error)]
pub enum CheegerError {
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("parameter {0} outside the admissible domain")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("config error in [{section}] field `{field}`: {message}")]
    Config {
        section: String,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CheegerError>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(CheegerError::Dimension {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
