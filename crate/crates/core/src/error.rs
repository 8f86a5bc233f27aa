use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerically rank deficient: {0}")]
    Rank(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    Definiteness(String),

    #[error("maximum row norm {radius} exceeds 1 (set allow_large_radius to override)")]
    Radius { radius: f64 },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("problem too large for a dense computation: {0}")]
    Size(String),

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical kind (rank, definiteness, overflow).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Rank(_) | Error::Definiteness(_) | Error::Overflow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &str, value: f64, upper: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value < upper {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "{name} = {value} must lie in (0, {upper})"
        )))
    }
}
