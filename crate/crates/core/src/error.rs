//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinates ({0}, {1})")]
    NonFinite(f64, f64),

    #[error("grid resolution {0} must be a power of two >= 8")]
    BadResolution(usize),

    #[error("field value at flat index {0} is not finite")]
    NonFiniteField(usize),

    #[error("{name} must satisfy {name} {bound}, got {value}")]
    BadParameter {
        name: &'static str,
        bound: &'static str,
        value: f64,
    },

    #[error("point cloud must contain at least one point")]
    EmptyCloud,

    #[error("cloud sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("right-hand side must have zero mean, |mean| = {0:.3e}")]
    NotMeanZero(f64),

    #[error("density has a negative value {value:.3e} at flat index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("total masses differ beyond tolerance: {0:.12e} vs {1:.12e}")]
    MassImbalance(f64, f64),

    #[error("brute-force enumeration limited to n <= {limit}, got {n}")]
    EnumerationBound { n: usize, limit: usize },

    #[error(
        "solver did not converge within {iterations} iterations: \
         residual {residual:.3e} > tol {tol:.3e} (energy {energy:.6e}, \
         gradient norm {grad_norm:.3e}, epsilon {epsilon:.1e})"
    )]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        tol: f64,
        energy: f64,
        grad_norm: f64,
        epsilon: f64,
    },

    #[error("entropic regularization too small: a scaling denominator vanished")]
    EpsilonTooSmall,

    #[error("transportation simplex exceeded its pivot budget ({0} pivots)")]
    PivotBudget(usize),

    #[error("grid resolutions differ: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
