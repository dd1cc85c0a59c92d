//! Thin singular value decomposition by one-sided Jacobi rotations.
//!
//! Naming follows the operator convention used throughout the crate: for
//! `A : X → Y` the singular system is `{u_i, σ_i, v_i}` with `A u_i = σ_i v_i`
//! and `Aᵀ v_i = σ_i u_i`, so the `u` columns live in the domain `X`
//! (length `cols`) and the `v` columns in the range `Y` (length `rows`):
//!
//! ```text
//! A = Σ_i σ_i v_i u_iᵀ = V · diag(σ) · Uᵀ
//! ```

use super::matrix::DenseMatrix;
use super::vector::{dot, Vec64};
use super::LinalgError;

/// Rotations are skipped once `|⟨a_p, a_q⟩| ≤ SVD_ROTATION_TOL · ‖a_p‖‖a_q‖`.
pub const SVD_ROTATION_TOL: f64 = 1e-12;
/// Sweep cap before reporting non-convergence.
pub const SVD_MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone)]
pub struct Svd {
    /// Domain singular vectors, `cols × k`.
    pub u: DenseMatrix,
    /// Singular values, nonincreasing.
    pub sigma: Vec64,
    /// Range singular vectors, `rows × k`.
    pub v: DenseMatrix,
}

impl Svd {
    pub fn rank_bound(&self) -> usize {
        self.sigma.len()
    }

    pub fn u_col(&self, i: usize) -> Vec64 {
        self.u.column(i)
    }

    pub fn v_col(&self, i: usize) -> Vec64 {
        self.v.column(i)
    }

    /// `Σ_i values_i v_i u_iᵀ`: an operator with this singular basis and the
    /// given singular values.
    pub fn compose(&self, values: &[f64]) -> DenseMatrix {
        assert_eq!(
            values.len(),
            self.sigma.len(),
            "singular value count mismatch"
        );
        let mut m = DenseMatrix::zeros(self.v.rows(), self.u.rows());
        for (i, &s) in values.iter().enumerate() {
            if s != 0.0 {
                m.add_outer(s, &self.v.column(i), &self.u.column(i));
            }
        }
        m
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.compose(&self.sigma)
    }
}

/// Thin SVD of `m`.
pub fn svd(m: &DenseMatrix) -> Result<Svd, LinalgError> {
    let (rows, cols) = m.shape();
    if !m.is_finite() {
        let index = m.data().iter().position(|v| !v.is_finite()).unwrap_or(0);
        return Err(LinalgError::NonFinite { index });
    }
    // The Jacobi kernel wants a tall working matrix; wide inputs are handled
    // through the transpose with the roles of the two bases swapped.
    let transposed = rows < cols;
    let work = if transposed { m.transpose() } else { m.clone() };
    let (tall_rows, tall_cols) = work.shape();
    let k = tall_cols;

    // Column-major copies: columns of the working matrix and the rotation
    // accumulator.
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| work.column(j).into_vec()).collect();
    let mut w: Vec<Vec<f64>> = (0..k).map(|j| Vec64::basis(k, j).into_vec()).collect();

    let mut converged = k < 2;
    let mut residual = 0.0;
    for _sweep in 0..SVD_MAX_SWEEPS {
        residual = 0.0f64;
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let cosine = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(cosine);
                if cosine <= SVD_ROTATION_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut w, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            rows,
            cols,
            sweeps: SVD_MAX_SWEEPS,
            residual,
        });
    }

    let norms: Vec<f64> = a.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut left: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut right: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            left.push(a[j].iter().map(|x| x / s).collect());
        } else {
            left.push(vec![0.0; tall_rows]);
            missing.push(slot);
        }
        right.push(w[j].clone());
    }
    complete_orthonormal(&mut left, &missing);

    for i in 0..k {
        // Deterministic signs: first significant entry of the range vector
        // is positive.
        let range_vec = if transposed { &right[i] } else { &left[i] };
        let scale = range_vec.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = range_vec.iter().find(|x| x.abs() > 1e-10 * scale).copied();
        if first.is_some_and(|x| x < 0.0) {
            left[i].iter_mut().for_each(|x| *x = -*x);
            right[i].iter_mut().for_each(|x| *x = -*x);
        }
    }

    let pack = |cols_: &[Vec<f64>], len: usize| {
        let mut out = DenseMatrix::zeros(len, k);
        for (j, c) in cols_.iter().enumerate() {
            out.set_column(j, c);
        }
        out
    };
    let left_m = pack(&left, tall_rows);
    let right_m = pack(&right, k);
    let (u, v) = if transposed {
        (left_m, right_m)
    } else {
        (right_m, left_m)
    };
    Ok(Svd {
        u,
        sigma: Vec64::from_vec(sigma),
        v,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all
/// other columns (Gram–Schmidt over canonical basis candidates).
fn complete_orthonormal(cols: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let len = cols[0].len();
    let mut candidate = 0;
    for &slot in missing {
        loop {
            assert!(candidate < len, "no orthogonal completion available");
            let mut e = vec![0.0; len];
            e[candidate] = 1.0;
            candidate += 1;
            // Two Gram–Schmidt passes for numerical orthogonality.
            for _ in 0..2 {
                for (j, c) in cols.iter().enumerate() {
                    if j == slot || (missing.contains(&j) && dot(c, c) == 0.0) {
                        continue;
                    }
                    let proj = dot(&e, c);
                    e.iter_mut().zip(c).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-6 {
                cols[slot] = e.into_iter().map(|x| x / norm).collect();
                break;
            }
        }
    }
}
