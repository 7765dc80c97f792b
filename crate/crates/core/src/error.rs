use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid surface parameters: {0}")]
    Parameter(String),

    #[error("invalid basis request: {0}")]
    Basis(String),

    #[error("grid {nx}x{ny} cannot resolve the product of modes {i} and {j}")]
    Nyquist { nx: usize, ny: usize, i: usize, j: usize },

    #[error("Fourier coefficient ({p}, {q}) lies outside the sampled band")]
    MissingCoefficient { p: i64, q: i64 },

    #[error("grid refinement did not converge: change {change:.3e} at {nx}x{ny} exceeds {tolerance:.1e}")]
    GridNotConverged {
        nx: usize,
        ny: usize,
        change: f64,
        tolerance: f64,
    },

    #[error("matrix is not symmetric: |A - A^T| = {0:.3e}")]
    NotSymmetric(f64),

    #[error("numerical fault: {0}")]
    Numerical(String),

    #[error("inconsistent bounds: {0}")]
    InconsistentBounds(String),

    #[error("catalog parse error on line {line}: {message}")]
    Catalog { line: usize, message: String },

    #[error("cache file {path}: {message}")]
    Cache { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
