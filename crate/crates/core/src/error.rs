use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),
    #[error("supercritical process: branching ratio {0} >= 1")]
    Supercritical(f64),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid event series: {0}")]
    InvalidSeries(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
