use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unstable AR polynomial (a root lies on or inside the unit circle)")]
    UnstableFilter,
    #[error("spectral density is negative ({min:e}) at omega = {omega}")]
    NegativeDensity { omega: f64, min: f64 },
    #[error("integrand is not finite at omega = {0}")]
    NonFiniteIntegrand(f64),
    #[error("integrand is negative ({value:e}) at omega = {omega}")]
    NegativeIntegrand { omega: f64, value: f64 },
    #[error("slot {slot} carries power {got} but the scheme requires {expected}")]
    PowerMismatch { slot: usize, expected: f64, got: f64 },
    #[error("frequency response is only defined for ARMA spectra")]
    NotArma,
    #[error("covariance is not positive semidefinite (pivot {0:e})")]
    NotPsd(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("grid has {0} points, above the limit of {1}")]
    GridTooLarge(u128, u128),
    #[error("parse error: {0}")]
    Parse(String),
}
