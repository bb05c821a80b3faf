use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("sample too small: need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("sample too large: at most {max} observations supported, got {got}")]
    TooManyObservations { max: usize, got: usize },
    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, StatsError>;

pub(crate) fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
