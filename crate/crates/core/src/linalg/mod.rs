//! Dense real linear algebra.

mod cholesky;
mod matrix;
mod power;
mod svd;
mod vector;

pub use cholesky::{solve_spd, Cholesky};
pub use matrix::{matmul, DenseMatrix};
pub use power::{dominant_eigenvalue, DEFAULT_POWER_ITERS};
pub use svd::{svd, Svd, SVD_MAX_SWEEPS, SVD_ROTATION_TOL};
pub use vector::Vec64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{rows}x{cols} matrix needs {} entries, got {got}", rows * cols)]
    InvalidData {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("non-finite entry at flat index {index}")]
    NonFinite { index: usize },
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error(
        "SVD of {rows}x{cols} matrix did not converge in {sweeps} sweeps (residual {residual:e})"
    )]
    NoConvergence {
        rows: usize,
        cols: usize,
        sweeps: usize,
        residual: f64,
    },
}
