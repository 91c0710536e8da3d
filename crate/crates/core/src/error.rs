use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants map onto the CLI exit codes: [`Error::Domain`] and
/// [`Error::Usage`] exit with status 2, [`Error::Numerical`] with status 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical procedure did not converge or hit a singular system.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Malformed configuration or an unsatisfiable request.
    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Usage(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}
