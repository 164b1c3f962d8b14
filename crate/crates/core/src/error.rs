use thiserror::Error;

/// Failures reported by the library.
///
/// Variants are grouped so that a front end can map them onto distinct exit
/// codes: bad input, numerical failure, and unsupported requests.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{field} {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("numerical convergence failure: {0}")]
    Convergence(String),

    #[error("domain too small: tail mass {tail_mass:.3e} beyond z_max; try z_max >= {suggested_z_max:.4e} m")]
    DomainTooSmall { tail_mass: f64, suggested_z_max: f64 },

    #[error("time step too large: dt*max|V|/hbar = {ratio:.3} exceeds 0.1; use dt <= {suggested_dt:.4e} s")]
    TimeStepTooLarge { ratio: f64, suggested_dt: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unsupported observable: {0}")]
    UnsupportedObservable(String),

    #[error("outside validity window: {0}")]
    OutsideValidity(String),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation { field, reason: reason.into() }
    }

    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::DomainTooSmall { .. }
                | Error::TimeStepTooLarge { .. }
                | Error::GridMismatch(_)
                | Error::UnsupportedObservable(_)
                | Error::OutsideValidity(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
