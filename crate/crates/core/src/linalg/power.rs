use super::matrix::DenseMatrix;
use crate::rng::GaussianStream;

pub const DEFAULT_POWER_ITERS: usize = 500;

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from a seeded random start. Returns the Rayleigh quotient of the
/// final iterate; the zero matrix gives 0.
pub fn dominant_eigenvalue(m: &DenseMatrix, iters: usize, seed: u64) -> f64 {
    assert!(m.is_square(), "dominant_eigenvalue needs a square matrix");
    let n = m.rows();
    if n == 0 {
        return 0.0;
    }
    let mut x = GaussianStream::new(seed).normal_vec(n);
    let norm = x.norm();
    x = x.scaled(1.0 / norm);
    for _ in 0..iters {
        let y = m.mul_vec(&x);
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        x = y.scaled(1.0 / norm);
    }
    x.dot(&m.mul_vec(&x))
}
