//! Forward operators.

use crate::linalg::{DenseMatrix, LinalgError, Vec64};

/// Midpoint discretization of `(Ax)(t) = ∫₀ᵗ x(s) ds` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct IntegrationOperator {
    pub n: usize,
    pub matrix: DenseMatrix,
}

impl IntegrationOperator {
    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Cell midpoints `t_i = (i + ½) h`.
    pub fn grid(&self) -> Vec64 {
        grid(self.n)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("integration operator needs at least one grid cell")]
pub struct EmptyGrid;

/// `h/2` on the diagonal, `h` below it, zero above, with `h = 1/n`.
pub fn make_integration(n: usize) -> Result<IntegrationOperator, EmptyGrid> {
    if n == 0 {
        return Err(EmptyGrid);
    }
    let h = 1.0 / n as f64;
    let matrix = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => h / 2.0,
        std::cmp::Ordering::Greater => h,
        std::cmp::Ordering::Less => 0.0,
    });
    Ok(IntegrationOperator { n, matrix })
}

pub fn grid(n: usize) -> Vec64 {
    let h = 1.0 / n as f64;
    Vec64::from_fn(n, |i| (i as f64 + 0.5) * h)
}

pub fn adjoint(m: &DenseMatrix) -> DenseMatrix {
    m.transpose()
}

/// `b − c · v uᵀ`
pub fn rank_one_update(
    b: &DenseMatrix,
    c: f64,
    v: &Vec64,
    u: &Vec64,
) -> Result<DenseMatrix, LinalgError> {
    if v.len() != b.rows() || u.len() != b.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "rank_one_update",
            left: b.shape(),
            right: (v.len(), u.len()),
        });
    }
    let mut out = b.clone();
    out.add_outer(-c, v, u);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;
    use crate::rng::GaussianStream;

    #[test]
    fn single_cell() {
        let a = make_integration(1).unwrap();
        assert_eq!(a.matrix.data(), &[0.5]);
    }

    #[test]
    fn four_cells() {
        let a = make_integration(4).unwrap().matrix;
        for i in 0..4 {
            assert_eq!(a[(i, i)], 0.125);
            for j in 0..i {
                assert_eq!(a[(i, j)], 0.25);
            }
            for j in (i + 1)..4 {
                assert_eq!(a[(i, j)], 0.0);
            }
        }
        let ones = a.mul_vec(&[1.0; 4]);
        assert_eq!(ones.as_slice(), &[0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn zero_size_is_rejected() {
        assert_eq!(make_integration(0).unwrap_err(), EmptyGrid);
    }

    #[test]
    fn singular_values_are_positive() {
        let a = make_integration(16).unwrap().matrix;
        let d = svd(&a).unwrap();
        assert!(d.sigma.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn adjoint_examples() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(
            adjoint(&m),
            DenseMatrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]])
        );
        let s = DenseMatrix::from_rows(&[&[1.0, 5.0], &[5.0, 2.0]]);
        assert_eq!(adjoint(&s), s);
    }

    #[test]
    fn adjoint_inner_product() {
        let mut g = GaussianStream::new(2);
        let a = DenseMatrix::from_fn(5, 3, |_, _| g.next_normal());
        let x = g.normal_vec(3);
        let y = g.normal_vec(5);
        let lhs = a.mul_vec(&x).dot(&y);
        let rhs = x.dot(&adjoint(&a).mul_vec(&y));
        assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn rank_one_update_examples() {
        let b = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let e1 = Vec64::basis(2, 0);
        let e2 = Vec64::basis(2, 1);
        assert_eq!(rank_one_update(&b, 0.0, &e1, &e2).unwrap(), b);
        let z = rank_one_update(&DenseMatrix::zeros(2, 2), 1.0, &e1, &e2).unwrap();
        assert_eq!(z, DenseMatrix::from_rows(&[&[0.0, -1.0], &[0.0, 0.0]]));
        assert!(rank_one_update(&b, 1.0, &Vec64::zeros(3), &e2).is_err());
    }

    #[test]
    fn update_along_singular_pair_changes_one_singular_value() {
        let a = make_integration(6).unwrap().matrix;
        let before = svd(&a).unwrap();
        let k = 2;
        let updated = rank_one_update(&a, 0.01, &before.v_col(k), &before.u_col(k)).unwrap();
        let after = svd(&updated).unwrap();
        let mut expected = before.sigma.clone().into_vec();
        expected[k] -= 0.01;
        expected.sort_by(|x, y| y.total_cmp(x));
        for (s, e) in after.sigma.iter().zip(&expected) {
            assert!((s - e).abs() < 1e-12, "{s} vs {e}");
        }
    }
}
