use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("boundary under-resolved: spacing {spacing} exceeds feature size {feature}")]
    UnderResolved { spacing: f64, feature: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("identity requires neutral ρ (mass mismatch {0:.3e})")]
    NotNeutral(f64),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("calibration bracket failed: {0}")]
    BracketFailed(String),
    #[error("obstacle solve did not converge after {iterations} sweeps (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("sample at ({x:.4}, {y:.4}) too close to the box edge")]
    NearBoxEdge { x: f64, y: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
