use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate surface mesh: {markers} markers (need at least 8)")]
    DegenerateMesh { markers: usize },

    #[error("poisson relaxation did not converge after {iterations} iterations (relative residual {residual:e})")]
    PoissonNotConverged { iterations: usize, residual: f64 },

    #[error("non-finite solution at step {step} (t = {time})")]
    Unstable { step: usize, time: f64 },

    #[error("cannot fit order: {0}")]
    Fit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
