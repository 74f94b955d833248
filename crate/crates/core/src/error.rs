use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("root finding failed: {0}")]
    Convergence(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("shape mismatch: expected {expected} samples, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("unknown multiplier symbol `{0}`")]
    UnknownSymbol(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("spectral truncation removed {fraction:.3e} of the mass (limit {limit:.1e})")]
    Truncation { fraction: f64, limit: f64 },

    #[error("ray does not meet the natural constraint: quartic part {quartic:.3e} below floor")]
    DegenerateRay { quartic: f64 },

    #[error("solver did not converge after {} iterations (residual {:.3e})", .0.iterations, .0.residual)]
    NoConvergence(Box<SolveReport>),

    #[error("iterate collapsed to zero: H1 norm {norm:.3e} below floor {floor:.3e}")]
    Collapse { norm: f64, floor: f64 },

    #[error("tail of the sequence is not Cauchy: {0}")]
    NonConvergentTail(String),

    #[error("unknown strategy `{name}`; available: {available}")]
    UnknownStrategy { name: String, available: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
