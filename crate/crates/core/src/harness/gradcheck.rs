use super::HarnessError;
use crate::deep_prior::{grad_f, grad_f_at_a, objective_f, DeepPriorError, DeepPriorProblem};
use crate::linalg::DenseMatrix;
use crate::prox::ProxKind;
use crate::rng::GaussianStream;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Largest size accepted by [`gradcheck`]; the check costs `O(n⁵)`.
pub const MAX_GRADCHECK_N: usize = 16;

/// Random `(A, B, y, α)` with Gaussian entries and `α` log-uniform in
/// `[1e-3, 1]`.
#[derive(Debug, Clone)]
pub struct GradcheckInstance {
    pub problem: DeepPriorProblem,
    pub b: DenseMatrix,
}

impl GradcheckInstance {
    pub fn random(n: usize, seed: u64) -> Self {
        let mut g = GaussianStream::new(seed);
        let a = DenseMatrix::from_fn(n, n, |_, _| g.next_normal());
        let b = DenseMatrix::from_fn(n, n, |_, _| g.next_normal());
        let y = g.normal_vec(n);
        let alpha = 10f64.powf(-3.0 * g.next_uniform());
        let problem = DeepPriorProblem {
            a,
            y,
            alpha,
            prox: ProxKind::HalfSquaredL2,
            lambda: 1.0,
        };
        Self { problem, b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub n: usize,
    pub seed: u64,
    pub alpha: f64,
    pub tol: f64,
    /// Relative error of the general gradient at the random `B`.
    pub grad_f_error: f64,
    /// Relative error of the explicit gradient at `B = A`.
    pub grad_f_at_a_error: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.grad_f_error <= self.tol && self.grad_f_at_a_error <= self.tol
    }
}

/// Central differences of `objective_f` in every entry of `b`.
pub fn fd_gradient(
    p: &DeepPriorProblem,
    b: &DenseMatrix,
    h: f64,
) -> Result<DenseMatrix, DeepPriorError> {
    let mut out = DenseMatrix::zeros(b.rows(), b.cols());
    let mut probe = b.clone();
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            let orig = probe[(i, j)];
            probe[(i, j)] = orig + h;
            let plus = objective_f(p, &probe)?;
            probe[(i, j)] = orig - h;
            let minus = objective_f(p, &probe)?;
            probe[(i, j)] = orig;
            out[(i, j)] = (plus - minus) / (2.0 * h);
        }
    }
    Ok(out)
}

/// `max|g − g_fd| / max|g_fd|`, or the absolute error when `g_fd` vanishes.
pub fn relative_error(g: &DenseMatrix, fd: &DenseMatrix) -> f64 {
    let diff = g.max_abs_diff(fd);
    let scale = fd.max_abs();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn gradcheck(n: usize, seed: u64, tol: f64) -> Result<GradcheckReport, HarnessError> {
    if n == 0 || n > MAX_GRADCHECK_N {
        return Err(HarnessError::InvalidConfig(format!(
            "gradcheck size must be in 1..={MAX_GRADCHECK_N}, got {n}"
        )));
    }
    let inst = GradcheckInstance::random(n, seed);
    let mut report = gradcheck_with(&inst, tol, grad_f, grad_f_at_a)?;
    report.seed = seed;
    Ok(report)
}

/// [`gradcheck`] on a given instance with the gradients supplied by the
/// caller.
pub fn gradcheck_with(
    inst: &GradcheckInstance,
    tol: f64,
    general: impl Fn(&DeepPriorProblem, &DenseMatrix) -> Result<DenseMatrix, DeepPriorError>,
    at_a: impl Fn(&DeepPriorProblem) -> Result<DenseMatrix, DeepPriorError>,
) -> Result<GradcheckReport, HarnessError> {
    let p = &inst.problem;
    let fd_b = fd_gradient(p, &inst.b, FD_STEP)?;
    let fd_a = fd_gradient(p, &p.a, FD_STEP)?;
    Ok(GradcheckReport {
        n: p.a.rows(),
        seed: 0,
        alpha: p.alpha,
        tol,
        grad_f_error: relative_error(&general(p, &inst.b)?, &fd_b),
        grad_f_at_a_error: relative_error(&at_a(p)?, &fd_a),
    })
}
