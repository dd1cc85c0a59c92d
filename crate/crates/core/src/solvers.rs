//! Landweber, ISTA and the unrolled proximal-gradient network.

use crate::linalg::{dominant_eigenvalue, DenseMatrix, LinalgError, Vec64, DEFAULT_POWER_ITERS};
use crate::prox::{check_threshold, ProxError, ProxKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error("{name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<(), SolverError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SolverError::InvalidParameter { name, value })
    }
}

fn check_dims(op: &'static str, b: &DenseMatrix, y: &Vec64, x: &Vec64) -> Result<(), LinalgError> {
    if y.len() != b.rows() || x.len() != b.cols() {
        return Err(LinalgError::DimensionMismatch {
            op,
            left: b.shape(),
            right: (y.len(), x.len()),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct LandweberResult {
    pub x: Vec64,
    /// `x¹, …, x^iters` (the start vector is not included).
    pub trace: Vec<Vec64>,
}

/// `x^{k+1} = x^k − η Aᵀ(A x^k − y)`
pub fn landweber(
    a: &DenseMatrix,
    y: &Vec64,
    x0: &Vec64,
    eta: f64,
    iters: usize,
) -> Result<LandweberResult, SolverError> {
    check_positive("eta", eta)?;
    check_dims("landweber", a, y, x0)?;
    let mut x = x0.clone();
    let mut trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        let grad = a.tr_mul_vec(&a.mul_vec(&x).sub(y));
        x.axpy(-eta, &grad);
        trace.push(x.clone());
    }
    Ok(LandweberResult { x, trace })
}

/// The network `φ_Θ(z) = Θ` whose only parameters are its output.
///
/// Training it on `½‖A φ_Θ(z) − y‖²` by gradient descent is the classical
/// Landweber iteration.
#[derive(Debug, Clone)]
pub struct TrivialNetwork {
    pub theta: Vec64,
}

impl TrivialNetwork {
    pub fn forward(&self, _z: &Vec64) -> Vec64 {
        self.theta.clone()
    }

    /// One descent step on the loss; returns the loss before the step.
    pub fn train_step(&mut self, a: &DenseMatrix, y: &Vec64, z: &Vec64, eta: f64) -> f64 {
        let out = self.forward(z);
        let residual = a.mul_vec(&out).sub(y);
        let loss = 0.5 * residual.norm_sq();
        let grad_out = a.tr_mul_vec(&residual);
        // dφ/dΘ is the identity
        self.theta.axpy(-eta, &grad_out);
        loss
    }
}

/// Largest admissible step `1/μ`, `μ` the largest eigenvalue of `BᵀB`; 1 for
/// the zero operator.
pub fn default_step(b: &DenseMatrix) -> f64 {
    let mu = dominant_eigenvalue(&b.gram(), DEFAULT_POWER_ITERS, 0);
    if mu > 0.0 {
        1.0 / mu
    } else {
        1.0
    }
}

/// One layer `x ↦ prox_{λα R}(W x + b)` with `W = I − λBᵀB`, `b = λBᵀy`.
#[derive(Debug, Clone)]
pub struct ProximalLayer {
    pub w: DenseMatrix,
    pub bias: Vec64,
    pub prox: ProxKind,
    pub threshold: f64,
}

impl ProximalLayer {
    pub fn new(
        b: &DenseMatrix,
        y: &Vec64,
        lambda: f64,
        alpha: f64,
        prox: ProxKind,
    ) -> Result<Self, SolverError> {
        check_positive("lambda", lambda)?;
        check_positive("alpha", alpha)?;
        if y.len() != b.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "proximal layer",
                left: b.shape(),
                right: (y.len(), 1),
            }
            .into());
        }
        let threshold = lambda * alpha;
        check_threshold(threshold)?;
        let mut w = b.gram().scaled(-lambda);
        w.add_diagonal(1.0);
        let bias = b.tr_mul_vec(y).scaled(lambda);
        Ok(Self {
            w,
            bias,
            prox,
            threshold,
        })
    }

    pub fn dim(&self) -> usize {
        self.bias.len()
    }

    /// `W x + b`
    pub fn pre_activation(&self, x: &Vec64) -> Vec64 {
        let mut s = self.w.mul_vec(x);
        s.axpy(1.0, &self.bias);
        s
    }

    pub fn activate(&self, s: &Vec64) -> Vec64 {
        s.map(|v| self.prox.scalar(self.threshold, v))
    }

    pub fn forward(&self, x: &Vec64) -> Vec64 {
        self.activate(&self.pre_activation(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IstaConfig {
    pub lambda: f64,
    pub alpha: f64,
    pub prox: ProxKind,
    pub max_iters: usize,
    /// Stop once `‖x^{k+1} − x^k‖ ≤ tol`.
    pub tol: f64,
}

impl IstaConfig {
    /// Configuration with the step `λ = 1/μ` of [`default_step`].
    pub fn with_default_step(
        b: &DenseMatrix,
        alpha: f64,
        prox: ProxKind,
        max_iters: usize,
        tol: f64,
    ) -> Self {
        Self {
            lambda: default_step(b),
            alpha,
            prox,
            max_iters,
            tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IstaResult {
    pub x: Vec64,
    pub iterations: usize,
    pub converged: bool,
}

/// Proximal gradient iteration `x^{k+1} = prox_{λα R}(x^k − λBᵀ(Bx^k − y))`.
pub fn ista(
    b: &DenseMatrix,
    y: &Vec64,
    x0: &Vec64,
    cfg: &IstaConfig,
) -> Result<IstaResult, SolverError> {
    check_dims("ista", b, y, x0)?;
    let layer = ProximalLayer::new(b, y, cfg.lambda, cfg.alpha, cfg.prox)?;
    let bound = default_step(b);
    if cfg.lambda > bound * (1.0 + 1e-9) {
        log::warn!(
            "ISTA step {} exceeds 1/μ = {}; the iteration may diverge",
            cfg.lambda,
            bound
        );
    }
    let mut x = x0.clone();
    for k in 0..cfg.max_iters {
        let next = layer.forward(&x);
        let step = next.distance(&x);
        x = next;
        if step <= cfg.tol {
            return Ok(IstaResult {
                x,
                iterations: k + 1,
                converged: true,
            });
        }
    }
    Ok(IstaResult {
        x,
        iterations: cfg.max_iters,
        converged: false,
    })
}

/// `layers` applications of the shared proximal layer starting from `z`.
pub fn unrolled_forward(
    b: &DenseMatrix,
    y: &Vec64,
    z: &Vec64,
    layers: usize,
    lambda: f64,
    alpha: f64,
    prox: ProxKind,
) -> Result<Vec64, SolverError> {
    check_dims("unrolled_forward", b, y, z)?;
    let layer = ProximalLayer::new(b, y, lambda, alpha, prox)?;
    let mut x = z.clone();
    for _ in 0..layers {
        x = layer.forward(&x);
    }
    Ok(x)
}
