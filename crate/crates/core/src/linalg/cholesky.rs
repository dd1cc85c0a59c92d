use super::matrix::DenseMatrix;
use super::vector::{dot, Vec64};
use super::LinalgError;

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
///
/// Only the lower triangle of the input is read.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(m: &DenseMatrix) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::DimensionMismatch {
                op: "cholesky",
                left: m.shape(),
                right: (m.cols(), m.rows()),
            });
        }
        let n = m.rows();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let row_j = &l[j * n..j * n + j];
            let d = m[(j, j)] - dot(row_j, row_j);
            if !(d > 0.0 && d.is_finite()) {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let s = m[(i, j)] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L Lᵀ x = b`.
    ///
    /// # Panics
    /// Panics if `b.len() != self.dim()`.
    pub fn solve(&self, b: &[f64]) -> Vec64 {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length mismatch");
        let mut x = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.l[k * n + i] * x[k]).sum();
            x[i] = (x[i] - s) / self.l[i * n + i];
        }
        Vec64::from_vec(x)
    }

    /// Explicit inverse, column by column.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.solve(&Vec64::basis(n, j));
            inv.set_column(j, &col);
        }
        inv
    }
}

/// Solves `m x = rhs` for symmetric positive definite `m`.
pub fn solve_spd(m: &DenseMatrix, rhs: &Vec64) -> Result<Vec64, LinalgError> {
    if rhs.len() != m.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "solve_spd",
            left: m.shape(),
            right: (rhs.len(), 1),
        });
    }
    Ok(Cholesky::factor(m)?.solve(rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianStream;

    #[test]
    fn identity_solve() {
        let b = Vec64::from_vec(vec![1.0, -2.0, 3.5]);
        assert_eq!(solve_spd(&DenseMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let m = DenseMatrix::from_diag(&[2.0, 4.0]);
        let x = solve_spd(&m, &Vec64::from_vec(vec![2.0, 4.0])).unwrap();
        assert!(x.max_abs_diff(&Vec64::from_vec(vec![1.0, 1.0])) < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        let mut g = GaussianStream::new(5);
        let a = DenseMatrix::from_fn(6, 6, |_, _| g.next_normal());
        let mut m = a.gram();
        m.add_diagonal(0.1);
        let rhs = g.normal_vec(6);
        let x = solve_spd(&m, &rhs).unwrap();
        let r = m.mul_vec(&x).sub(&rhs);
        assert!(r.norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn indefinite_matrix_breaks_down() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let err = solve_spd(&m, &Vec64::zeros(2)).unwrap_err();
        assert!(matches!(
            err,
            LinalgError::NotPositiveDefinite { index: 1, .. }
        ));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m = DenseMatrix::from_rows(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let inv = Cholesky::factor(&m).unwrap().inverse();
        let prod = m.matmul(&inv).unwrap();
        assert!(prod.max_abs_diff(&DenseMatrix::identity(3)) < 1e-14);
    }
}
