use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("problem size {nodes} exceeds the dense cap of {cap} nodes")]
    SizeCap { nodes: usize, cap: usize },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("quadrature window: {0}")]
    QuadratureWindow(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("configuration: {0}")]
    Config(String),

    #[error("support violation: {0}")]
    Support(String),

    #[error("incompatible data: {0}")]
    IncompatibleData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_alpha_open(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha outside (0,1): {alpha}")));
    }
    Ok(())
}
