//! Analytic deep prior: Tikhonov reconstruction `x(B)` with a learned
//! operator `B`, the outer functional `F(B) = ½‖A x(B) − y‖²`, its gradient,
//! gradient descent on `B`, and the scalar analysis of that descent on a
//! single singular component.

use std::fmt;
use std::str::FromStr;

use crate::linalg::{Cholesky, DenseMatrix, LinalgError, Svd, Vec64};
use crate::prox::{ProxError, ProxKind};
use crate::rng::GaussianStream;
use crate::solvers::{default_step, ProximalLayer, SolverError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeepPriorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("{op} needs the half squared l2 regularizer, got {kind}")]
    UnsupportedProx { op: &'static str, kind: ProxKind },
    #[error("{name} is invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("descent diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        trace: Box<DescentTrace>,
    },
}

fn check_positive(name: &'static str, value: f64) -> Result<(), DeepPriorError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DeepPriorError::InvalidParameter { name, value })
    }
}

/// Forward operator, data and regularization parameters of one problem.
#[derive(Debug, Clone)]
pub struct DeepPriorProblem {
    pub a: DenseMatrix,
    pub y: Vec64,
    pub alpha: f64,
    pub prox: ProxKind,
    /// Step size of the unrolled network layers.
    pub lambda: f64,
}

impl DeepPriorProblem {
    pub fn new(
        a: DenseMatrix,
        y: Vec64,
        alpha: f64,
        prox: ProxKind,
        lambda: f64,
    ) -> Result<Self, DeepPriorError> {
        check_positive("alpha", alpha)?;
        check_positive("lambda", lambda)?;
        if y.len() != a.rows() {
            return Err(LinalgError::DimensionMismatch {
                op: "deep prior problem",
                left: a.shape(),
                right: (y.len(), 1),
            }
            .into());
        }
        Ok(Self {
            a,
            y,
            alpha,
            prox,
            lambda,
        })
    }

    /// Problem with `λ = 1/μ`, `μ` the largest eigenvalue of `AᵀA`.
    pub fn with_default_step(
        a: DenseMatrix,
        y: Vec64,
        alpha: f64,
        prox: ProxKind,
    ) -> Result<Self, DeepPriorError> {
        let lambda = default_step(&a);
        Self::new(a, y, alpha, prox, lambda)
    }

    fn require_l2(&self, op: &'static str) -> Result<(), DeepPriorError> {
        match self.prox {
            ProxKind::HalfSquaredL2 => Ok(()),
            kind => Err(DeepPriorError::UnsupportedProx { op, kind }),
        }
    }

    fn check_operator(&self, b: &DenseMatrix) -> Result<(), DeepPriorError> {
        if b.shape() != self.a.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "operator B",
                left: self.a.shape(),
                right: b.shape(),
            }
            .into());
        }
        Ok(())
    }
}

/// Factorization of `BᵀB + αI` together with `x(B)`.
struct InnerSolve {
    chol: Cholesky,
    x: Vec64,
}

fn inner_solve(b: &DenseMatrix, y: &Vec64, alpha: f64) -> Result<InnerSolve, DeepPriorError> {
    let mut m = b.gram();
    m.add_diagonal(alpha);
    let chol = Cholesky::factor(&m)?;
    let x = chol.solve(&b.tr_mul_vec(y));
    Ok(InnerSolve { chol, x })
}

/// `x(B) = (BᵀB + αI)⁻¹ Bᵀ y`
pub fn tikhonov_solve(b: &DenseMatrix, y: &Vec64, alpha: f64) -> Result<Vec64, DeepPriorError> {
    check_positive("alpha", alpha)?;
    if y.len() != b.rows() {
        return Err(LinalgError::DimensionMismatch {
            op: "tikhonov_solve",
            left: b.shape(),
            right: (y.len(), 1),
        }
        .into());
    }
    Ok(inner_solve(b, y, alpha)?.x)
}

fn half_residual_sq(a: &DenseMatrix, x: &Vec64, y: &Vec64) -> f64 {
    0.5 * a.mul_vec(x).sub(y).norm_sq()
}

/// `F(B) = ½‖A x(B) − y‖²`
pub fn objective_f(p: &DeepPriorProblem, b: &DenseMatrix) -> Result<f64, DeepPriorError> {
    p.check_operator(b)?;
    let x = tikhonov_solve(b, &p.y, p.alpha)?;
    Ok(half_residual_sq(&p.a, &x, &p.y))
}

/// Gradient of `F` with respect to `B`.
///
/// With `M = BᵀB + αI`, `x = M⁻¹Bᵀy`, `z = Aᵀ(Ax − y)` and `w = M⁻¹z`:
///
/// ```text
/// ∇F(B) = (y − Bx) wᵀ − (Bw) xᵀ
/// ```
pub fn grad_f(p: &DeepPriorProblem, b: &DenseMatrix) -> Result<DenseMatrix, DeepPriorError> {
    p.require_l2("grad_f")?;
    p.check_operator(b)?;
    Ok(exact_step(p, b)?.grad)
}

struct ExactStep {
    x: Vec64,
    objective: f64,
    grad: DenseMatrix,
}

fn exact_step(p: &DeepPriorProblem, b: &DenseMatrix) -> Result<ExactStep, DeepPriorError> {
    let InnerSolve { chol, x } = inner_solve(b, &p.y, p.alpha)?;
    let residual = p.a.mul_vec(&x).sub(&p.y);
    let objective = 0.5 * residual.norm_sq();
    let w = chol.solve(&p.a.tr_mul_vec(&residual));
    let data_misfit = p.y.sub(&b.mul_vec(&x));
    let mut grad = DenseMatrix::outer(&data_misfit, &w);
    grad.add_outer(-1.0, &b.mul_vec(&w), &x);
    Ok(ExactStep { x, objective, grad })
}

/// Gradient of `F` at `B = A` in explicit form.
///
/// With `M = AᵀA + αI` and `N = AAᵀ + αI`:
///
/// ```text
/// ∇F(A) = −α² N⁻¹y yᵀA M⁻² + α A M⁻² Aᵀy yᵀA M⁻¹
/// ```
///
/// Both terms are rank one; the `N` solve is independent of the route taken
/// by [`grad_f`].
pub fn grad_f_at_a(p: &DeepPriorProblem) -> Result<DenseMatrix, DeepPriorError> {
    p.require_l2("grad_f_at_a")?;
    let a = &p.a;
    let mut m = a.gram();
    m.add_diagonal(p.alpha);
    let m = Cholesky::factor(&m)?;
    let mut n = a.gram_outer();
    n.add_diagonal(p.alpha);
    let n = Cholesky::factor(&n)?;

    let q = m.solve(&a.tr_mul_vec(&p.y)); // M⁻¹Aᵀy
    let r = m.solve(&q); // M⁻²Aᵀy
    let s = n.solve(&p.y); // N⁻¹y
    let mut g = DenseMatrix::outer(&s, &r).scaled(-p.alpha * p.alpha);
    g.add_outer(p.alpha, &a.mul_vec(&r), &q);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentMode {
    /// Gradient of `F` through the closed-form inner solve.
    ExactGradient,
    /// Network training: `L` proximal layers run from the carried-over
    /// state, backpropagation through those `L` layers only.
    TruncatedUnroll,
}

impl fmt::Display for DescentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DescentMode::ExactGradient => "exact",
            DescentMode::TruncatedUnroll => "unroll",
        })
    }
}

impl FromStr for DescentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(DescentMode::ExactGradient),
            "unroll" => Ok(DescentMode::TruncatedUnroll),
            _ => Err(format!(
                "unknown descent mode {s:?} (expected exact or unroll)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentConfig {
    pub eta: f64,
    pub iters: usize,
    /// Unroll depth `L`.
    pub layers: usize,
    pub mode: DescentMode,
    pub seed: u64,
    /// Standard deviation of the Gaussian network input `z`.
    pub z_scale: f64,
    /// Standard deviation of Gaussian noise added to `B₀ = A`.
    pub b0_noise: f64,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            eta: 0.05,
            iters: 1000,
            layers: 10,
            mode: DescentMode::ExactGradient,
            seed: 0,
            z_scale: 1e-3,
            b0_noise: 0.0,
        }
    }
}

impl DescentConfig {
    fn validate(&self) -> Result<(), DeepPriorError> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(DeepPriorError::InvalidParameter {
                name: "eta",
                value: self.eta,
            });
        }
        if self.layers == 0 {
            return Err(DeepPriorError::InvalidParameter {
                name: "layers",
                value: 0.0,
            });
        }
        if !(self.z_scale >= 0.0 && self.z_scale.is_finite()) {
            return Err(DeepPriorError::InvalidParameter {
                name: "z_scale",
                value: self.z_scale,
            });
        }
        if !(self.b0_noise >= 0.0 && self.b0_noise.is_finite()) {
            return Err(DeepPriorError::InvalidParameter {
                name: "b0_noise",
                value: self.b0_noise,
            });
        }
        Ok(())
    }
}

/// Per-iteration record of a descent on `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrace {
    /// `‖x_k − x†‖`, when `x†` was supplied.
    pub true_error: Option<Vec<f64>>,
    /// Loss at `B_k`.
    pub objective: Vec<f64>,
    /// `‖B_k − B_{k+1}‖_F²`
    pub frob_sq: Vec<f64>,
    pub b_opt: DenseMatrix,
    pub x_opt: Vec64,
}

impl DescentTrace {
    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }

    pub fn final_true_error(&self, x_true: &Vec64) -> f64 {
        self.x_opt.distance(x_true)
    }
}

/// Blow-up factor over the initial objective that counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Gradient descent `B_{k+1} = B_k − η ∇_B loss`, starting from `B₀ = A`.
pub fn descend_b(
    p: &DeepPriorProblem,
    cfg: &DescentConfig,
    x_true: Option<&Vec64>,
) -> Result<DescentTrace, DeepPriorError> {
    descend_b_with(p, cfg, x_true, |_, _| {})
}

/// [`descend_b`] with an observer called on every iterate `B_0, …, B_iters`.
pub fn descend_b_with(
    p: &DeepPriorProblem,
    cfg: &DescentConfig,
    x_true: Option<&Vec64>,
    mut observe: impl FnMut(usize, &DenseMatrix),
) -> Result<DescentTrace, DeepPriorError> {
    cfg.validate()?;
    if cfg.mode == DescentMode::ExactGradient {
        p.require_l2("exact-gradient descent")?;
    }
    if let Some(xt) = x_true {
        if xt.len() != p.a.cols() {
            return Err(LinalgError::DimensionMismatch {
                op: "descend_b true solution",
                left: p.a.shape(),
                right: (xt.len(), 1),
            }
            .into());
        }
    }

    let mut rng = GaussianStream::new(cfg.seed);
    let mut state = rng.normal_vec(p.a.cols()).scaled(cfg.z_scale);
    let mut b = p.a.clone();
    if cfg.b0_noise > 0.0 {
        let noise = DenseMatrix::from_fn(b.rows(), b.cols(), |_, _| rng.next_normal());
        b.add_scaled(cfg.b0_noise, &noise);
    }

    let mut trace = DescentTrace {
        true_error: x_true.map(|_| Vec::with_capacity(cfg.iters)),
        objective: Vec::with_capacity(cfg.iters),
        frob_sq: Vec::with_capacity(cfg.iters),
        b_opt: DenseMatrix::zeros(0, 0),
        x_opt: Vec64::zeros(0),
    };
    let mut limit = f64::INFINITY;
    let mut last_x = Vec64::zeros(0);

    for k in 0..cfg.iters {
        observe(k, &b);
        let step = match cfg.mode {
            DescentMode::ExactGradient => {
                exact_step(p, &b).map(|s| (s.x, s.objective, s.grad, None))
            }
            DescentMode::TruncatedUnroll => unroll_step(p, &b, &state, cfg.layers).map(|s| {
                let out = s.x.clone();
                (s.x, s.objective, s.grad, Some(out))
            }),
        };
        let (x, objective, grad, next_state) = match step {
            // BᵀB + αI loses definiteness in floating point only once B has
            // blown up.
            Err(DeepPriorError::Linalg(LinalgError::NotPositiveDefinite { .. })) if k > 0 => {
                trace.b_opt = b;
                trace.x_opt = last_x;
                return Err(DeepPriorError::Diverged {
                    iteration: k,
                    trace: Box::new(trace),
                });
            }
            other => other?,
        };
        if k == 0 {
            limit = DIVERGENCE_FACTOR * objective.max(f64::MIN_POSITIVE);
        }
        if !objective.is_finite() || objective > limit || !grad.is_finite() {
            trace.b_opt = b;
            trace.x_opt = x;
            return Err(DeepPriorError::Diverged {
                iteration: k,
                trace: Box::new(trace),
            });
        }
        if let (Some(errs), Some(xt)) = (trace.true_error.as_mut(), x_true) {
            errs.push(x.distance(xt));
        }
        trace.objective.push(objective);
        trace
            .frob_sq
            .push(cfg.eta * cfg.eta * grad.frobenius_norm_sq());
        b.add_scaled(-cfg.eta, &grad);
        if let Some(s) = next_state {
            state = s;
        }
        last_x = x;
    }
    observe(cfg.iters, &b);

    trace.x_opt = match cfg.mode {
        DescentMode::ExactGradient => tikhonov_solve(&b, &p.y, p.alpha)?,
        DescentMode::TruncatedUnroll => {
            let layer = ProximalLayer::new(&b, &p.y, p.lambda, p.alpha, p.prox)?;
            (0..cfg.layers).fold(state, |x, _| layer.forward(&x))
        }
    };
    trace.b_opt = b;
    Ok(trace)
}

struct UnrollStep {
    x: Vec64,
    objective: f64,
    grad: DenseMatrix,
}

/// Forward through `layers` proximal layers from `state`, then reverse-mode
/// differentiation of `½‖A x_L − y‖²` with respect to the shared `B`.
fn unroll_step(
    p: &DeepPriorProblem,
    b: &DenseMatrix,
    state: &Vec64,
    layers: usize,
) -> Result<UnrollStep, DeepPriorError> {
    let layer = ProximalLayer::new(b, &p.y, p.lambda, p.alpha, p.prox)?;
    let mut inputs = Vec::with_capacity(layers);
    let mut pre = Vec::with_capacity(layers);
    let mut x = state.clone();
    for _ in 0..layers {
        let s = layer.pre_activation(&x);
        let next = layer.activate(&s);
        inputs.push(x);
        pre.push(s);
        x = next;
    }
    let residual = p.a.mul_vec(&x).sub(&p.y);
    let objective = 0.5 * residual.norm_sq();

    // s_j = x_j − λBᵀ(B x_j − y)
    let lambda = p.lambda;
    let mut g = p.a.tr_mul_vec(&residual);
    let mut grad = DenseMatrix::zeros(b.rows(), b.cols());
    for (xj, sj) in inputs.iter().zip(&pre).rev() {
        let gs: Vec64 = sj
            .iter()
            .zip(g.iter())
            .map(|(&s, &gi)| p.prox.derivative(layer.threshold, s) * gi)
            .collect();
        let b_gs = b.mul_vec(&gs);
        let rj = b.mul_vec(xj).sub(&p.y);
        grad.add_outer(-lambda, &rj, &gs);
        grad.add_outer(-lambda, &b_gs, xj);
        g = gs.sub(&b.tr_mul_vec(&b_gs).scaled(lambda));
    }
    Ok(UnrollStep { x, objective, grad })
}

/// Step `c(β)` of the scalar iteration `β_{ℓ+1} = β_ℓ − c(β_ℓ)` followed by
/// the singular value paired with data `y = (σ + δ) v`:
///
/// ```text
/// c(β) = η σ (σ+δ)² (α + β² − σβ)(β² − α) / (β² + α)³
/// ```
pub fn beta_step(beta: f64, sigma: f64, alpha: f64, delta: f64, eta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = b2 + alpha;
    eta * sigma * (sigma + delta).powi(2) * (alpha + b2 - sigma * beta) * (b2 - alpha)
        / (denom * denom * denom)
}

pub fn beta_update(beta: f64, sigma: f64, alpha: f64, delta: f64, eta: f64) -> f64 {
    beta - beta_step(beta, sigma, alpha, delta, eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Attractive,
    Repulsive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub beta: f64,
    pub stability: Stability,
}

/// Central-difference step for the sign of `∂_β c`.
pub const STABILITY_FD_STEP: f64 = 1e-7;

/// Real roots of `c` with their stability, in decreasing order of `β`.
///
/// A root is attractive when `∂_β c > 0` there, i.e. the map `β − c(β)` has
/// slope below one.
pub fn beta_fixed_points(sigma: f64, alpha: f64) -> Vec<FixedPoint> {
    let sqrt_alpha = alpha.sqrt();
    let disc = sigma * sigma / 4.0 - alpha;
    let mut roots = vec![sqrt_alpha, -sqrt_alpha];
    if disc == 0.0 {
        // β² − σβ + α = (β − √α)², so c ~ (β − √α)³ near the root and the
        // iteration still contracts towards it.
        let mut points = vec![FixedPoint {
            beta: sigma / 2.0,
            stability: Stability::Attractive,
        }];
        points.push(FixedPoint {
            beta: -sqrt_alpha,
            stability: classify(-sqrt_alpha, sigma, alpha, 2.0 * sqrt_alpha),
        });
        return points;
    }
    if disc > 0.0 {
        let d = disc.sqrt();
        roots.push(sigma / 2.0 + d);
        roots.push(sigma / 2.0 - d);
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let gap = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &r)| (r - beta).abs())
                .fold(f64::INFINITY, f64::min);
            FixedPoint {
                beta,
                stability: classify(beta, sigma, alpha, gap),
            }
        })
        .collect()
}

fn classify(beta: f64, sigma: f64, alpha: f64, gap: f64) -> Stability {
    let h = STABILITY_FD_STEP.min(gap / 4.0);
    let slope = (beta_step(beta + h, sigma, alpha, 0.0, 1.0)
        - beta_step(beta - h, sigma, alpha, 0.0, 1.0))
        / (2.0 * h);
    if slope > 0.0 {
        Stability::Attractive
    } else {
        Stability::Repulsive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaIterationResult {
    pub betas: Vec<f64>,
    pub converged: bool,
    pub fixed_points: Vec<FixedPoint>,
    /// Coefficient of the reconstruction on `u` at the final `β`.
    pub x_limit: f64,
}

/// Iterates [`beta_update`] from `beta0` until `|β_{ℓ+1} − β_ℓ| ≤ tol` or
/// `max_iters` steps.
pub fn beta_iteration(
    sigma: f64,
    alpha: f64,
    delta: f64,
    eta: f64,
    beta0: f64,
    max_iters: usize,
    tol: f64,
) -> BetaIterationResult {
    let mut betas = vec![beta0];
    let mut beta = beta0;
    let mut converged = false;
    for _ in 0..max_iters {
        let next = beta_update(beta, sigma, alpha, delta, eta);
        betas.push(next);
        let step = (next - beta).abs();
        beta = next;
        if step <= tol {
            converged = true;
            break;
        }
    }
    BetaIterationResult {
        betas,
        converged,
        fixed_points: beta_fixed_points(sigma, alpha),
        x_limit: beta / (beta * beta + alpha) * (sigma + delta),
    }
}

/// Limit coefficient on `u`: `(σ+δ)/(2√α)` below the knee `σ < 2√α`,
/// `(σ+δ)/σ` above it.
pub fn beta_limit_reconstruction(sigma: f64, alpha: f64, delta: f64) -> f64 {
    let knee = 2.0 * alpha.sqrt();
    if sigma < knee {
        (sigma + delta) / knee
    } else {
        (sigma + delta) / sigma
    }
}

/// Singular value of the optimal operator paired with `σ`.
pub fn optimal_beta(sigma: f64, alpha: f64) -> f64 {
    let disc = sigma * sigma / 4.0 - alpha;
    if disc >= 0.0 {
        sigma / 2.0 + disc.sqrt()
    } else {
        alpha.sqrt()
    }
}

/// `B_α = Σ β_i v_i u_iᵀ` with `β_i = optimal_beta(σ_i, α)`.
pub fn optimal_b(svd_of_a: &Svd, alpha: f64) -> DenseMatrix {
    let betas: Vec<f64> = svd_of_a
        .sigma
        .iter()
        .map(|&s| optimal_beta(s, alpha))
        .collect();
    svd_of_a.compose(&betas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{filtered_pseudoinverse, FilterFamily, SpectralFilter};
    use crate::linalg::svd;
    use crate::operators::make_integration;

    fn random_problem(n: usize, seed: u64, alpha: f64) -> (DeepPriorProblem, DenseMatrix) {
        let mut g = GaussianStream::new(seed);
        let a = DenseMatrix::from_fn(n, n, |_, _| g.next_normal());
        let b = DenseMatrix::from_fn(n, n, |_, _| g.next_normal());
        let y = g.normal_vec(n);
        let p = DeepPriorProblem::new(a, y, alpha, ProxKind::HalfSquaredL2, 0.1).unwrap();
        (p, b)
    }

    fn fd_gradient(p: &DeepPriorProblem, b: &DenseMatrix, h: f64) -> DenseMatrix {
        DenseMatrix::from_fn(b.rows(), b.cols(), |i, j| {
            let mut plus = b.clone();
            plus[(i, j)] += h;
            let mut minus = b.clone();
            minus[(i, j)] -= h;
            (objective_f(p, &plus).unwrap() - objective_f(p, &minus).unwrap()) / (2.0 * h)
        })
    }

    #[test]
    fn tikhonov_solve_examples() {
        let x = tikhonov_solve(
            &DenseMatrix::identity(2),
            &Vec64::basis(2, 0).scaled(2.0),
            1.0,
        );
        assert!(x.unwrap().max_abs_diff(&Vec64::basis(2, 0)) < 1e-15);
        let (p, b) = random_problem(4, 3, 1.0);
        let x = tikhonov_solve(&b, &p.y, 1e6).unwrap();
        let asym = b.tr_mul_vec(&p.y).scaled(1e-6);
        assert!(x.sub(&asym).norm() <= 1e-4 * asym.norm());
        assert!(tikhonov_solve(&b, &p.y, 0.0).is_err());
    }

    #[test]
    fn objective_zero_data() {
        let (mut p, b) = random_problem(4, 1, 0.1);
        p.y = Vec64::zeros(4);
        assert_eq!(objective_f(&p, &b).unwrap(), 0.0);
        assert_eq!(grad_f(&p, &b).unwrap().max_abs(), 0.0);
        assert_eq!(grad_f_at_a(&p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..4 {
            let (p, b) = random_problem(5, seed, 0.3);
            let g = grad_f(&p, &b).unwrap();
            let fd = fd_gradient(&p, &b, 1e-5);
            assert!(g.max_abs_diff(&fd) <= 1e-6 * fd.max_abs(), "seed {seed}");
        }
    }

    #[test]
    fn explicit_gradient_at_a_agrees() {
        let (p, _) = random_problem(6, 9, 0.05);
        let g = grad_f(&p, &p.a).unwrap();
        let ga = grad_f_at_a(&p).unwrap();
        assert!(g.max_abs_diff(&ga) <= 1e-10 * g.max_abs());
    }

    #[test]
    fn gradients_need_l2() {
        let (mut p, b) = random_problem(3, 0, 0.1);
        p.prox = ProxKind::L1;
        assert!(matches!(
            grad_f(&p, &b),
            Err(DeepPriorError::UnsupportedProx { .. })
        ));
        assert!(matches!(
            grad_f_at_a(&p),
            Err(DeepPriorError::UnsupportedProx { .. })
        ));
    }

    #[test]
    fn gradient_at_a_for_singular_data_is_rank_one() {
        let a = make_integration(8).unwrap().matrix;
        let d = svd(&a).unwrap();
        let (k, delta, alpha) = (1, 0.1, 1e-3);
        let sigma = d.sigma[k];
        let y = d.v_col(k).scaled(sigma + delta);
        let p = DeepPriorProblem::new(a, y, alpha, ProxKind::HalfSquaredL2, 1.0).unwrap();
        let g = grad_f_at_a(&p).unwrap();
        let c0 = beta_step(sigma, sigma, alpha, delta, 1.0);
        let expected = DenseMatrix::outer(&d.v_col(k), &d.u_col(k)).scaled(c0);
        assert!(g.max_abs_diff(&expected) <= 1e-10 * expected.max_abs());
    }

    #[test]
    fn zero_learning_rate_keeps_b() {
        let (p, _) = random_problem(4, 2, 0.1);
        let cfg = DescentConfig {
            eta: 0.0,
            iters: 5,
            ..DescentConfig::default()
        };
        let t = descend_b(&p, &cfg, None).unwrap();
        assert_eq!(t.b_opt, p.a);
        assert!(t.frob_sq.iter().all(|&f| f == 0.0));
        assert!(t.true_error.is_none());
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn exact_descent_decreases_objective() {
        let a = make_integration(20).unwrap().matrix;
        let mut g = GaussianStream::new(5);
        let y = a.mul_vec(&g.normal_vec(20));
        let p = DeepPriorProblem::with_default_step(a, y, 1e-2, ProxKind::HalfSquaredL2).unwrap();
        let cfg = DescentConfig {
            iters: 50,
            ..DescentConfig::default()
        };
        let t = descend_b(&p, &cfg, None).unwrap();
        assert!(t.objective.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn unroll_gradient_matches_finite_differences() {
        let n = 4;
        let mut g = GaussianStream::new(13);
        let a = DenseMatrix::from_fn(n, n, |_, _| g.next_normal());
        let b = DenseMatrix::from_fn(n, n, |_, _| g.next_normal());
        let y = g.normal_vec(n);
        let state = g.normal_vec(n);
        for prox in [
            ProxKind::HalfSquaredL2,
            ProxKind::L1,
            ProxKind::NonnegIndicator,
        ] {
            let p = DeepPriorProblem::new(a.clone(), y.clone(), 0.05, prox, 0.02).unwrap();
            let s = unroll_step(&p, &b, &state, 3).unwrap();
            let loss = |m: &DenseMatrix| unroll_step(&p, m, &state, 3).unwrap().objective;
            let h = 1e-6;
            let fd = DenseMatrix::from_fn(n, n, |i, j| {
                let mut plus = b.clone();
                plus[(i, j)] += h;
                let mut minus = b.clone();
                minus[(i, j)] -= h;
                (loss(&plus) - loss(&minus)) / (2.0 * h)
            });
            assert!(
                s.grad.max_abs_diff(&fd) <= 1e-6 * fd.max_abs().max(1.0),
                "{prox}"
            );
        }
    }

    #[test]
    fn unroll_descent_runs_with_every_prox() {
        let a = make_integration(12).unwrap().matrix;
        let y = a.mul_vec(&Vec64::from_fn(12, |i| (i as f64 * 0.5).sin()));
        for prox in [
            ProxKind::HalfSquaredL2,
            ProxKind::L1,
            ProxKind::NonnegIndicator,
        ] {
            let p = DeepPriorProblem::with_default_step(a.clone(), y.clone(), 1e-3, prox).unwrap();
            let cfg = DescentConfig {
                iters: 20,
                mode: DescentMode::TruncatedUnroll,
                ..DescentConfig::default()
            };
            let t = descend_b(&p, &cfg, None).unwrap();
            assert_eq!(t.len(), 20);
            assert!(t.x_opt.is_finite());
        }
    }

    #[test]
    fn exact_descent_rejects_other_prox() {
        let (mut p, _) = random_problem(3, 0, 0.1);
        p.prox = ProxKind::L1;
        let r = descend_b(&p, &DescentConfig::default(), None);
        assert!(matches!(r, Err(DeepPriorError::UnsupportedProx { .. })));
    }

    #[test]
    fn divergence_is_reported_with_partial_trace() {
        let a = make_integration(10).unwrap().matrix;
        let y = a.mul_vec(&Vec64::from_fn(10, |i| i as f64));
        let p = DeepPriorProblem::with_default_step(a, y, 1e-4, ProxKind::HalfSquaredL2).unwrap();
        let cfg = DescentConfig {
            eta: 1e9,
            iters: 100,
            ..DescentConfig::default()
        };
        match descend_b(&p, &cfg, None) {
            Err(DeepPriorError::Diverged { iteration, trace }) => {
                assert!(iteration > 0);
                assert_eq!(trace.len(), iteration);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn beta_update_fixed_points() {
        let (sigma, alpha) = (1.0, 0.04f64);
        let root = alpha.sqrt();
        assert!((beta_update(root, sigma, alpha, 0.1, 0.05) - root).abs() < 1e-15);
        let d = (sigma * sigma / 4.0 - alpha).sqrt();
        for beta in [sigma / 2.0 + d, sigma / 2.0 - d] {
            assert!((beta_update(beta, sigma, alpha, 0.1, 0.05) - beta).abs() < 1e-15);
        }
    }

    #[test]
    fn beta_update_matches_expanded_polynomial() {
        // c(β) = ησ(σ+δ)²·(β⁴ − σβ³ + σαβ − α²)/(β² + α)³
        let (sigma, alpha, delta, eta) = (1.0f64, 0.04f64, 0.1f64, 0.05f64);
        let mut beta = sigma;
        for _ in 0..50 {
            let num = beta.powi(4) - sigma * beta.powi(3) + sigma * alpha * beta - alpha * alpha;
            let expected =
                beta - eta * sigma * (sigma + delta).powi(2) * num / (beta * beta + alpha).powi(3);
            let got = beta_update(beta, sigma, alpha, delta, eta);
            assert!((got - expected).abs() <= 1e-15 * expected.abs().max(1.0));
            beta = got;
        }
    }

    fn attractive(points: &[FixedPoint]) -> Vec<f64> {
        points
            .iter()
            .filter(|p| p.stability == Stability::Attractive)
            .map(|p| p.beta)
            .collect()
    }

    #[test]
    fn fixed_points_below_knee() {
        let points = beta_fixed_points(1.0, 1.0);
        assert_eq!(points.len(), 2);
        assert_eq!(attractive(&points), vec![1.0]);
        assert_eq!(points[1].beta, -1.0);
        assert_eq!(points[1].stability, Stability::Repulsive);
    }

    #[test]
    fn fixed_points_above_knee() {
        let points = beta_fixed_points(1.0, 0.04);
        assert_eq!(points.len(), 4);
        let d = 0.21f64.sqrt();
        let att = attractive(&points);
        assert_eq!(att.len(), 2);
        assert!((att[0] - (0.5 + d)).abs() < 1e-15);
        assert!((att[1] - (0.5 - d)).abs() < 1e-15);
        let sqrt_alpha = points
            .iter()
            .find(|p| (p.beta - 0.2).abs() < 1e-15)
            .unwrap();
        assert_eq!(sqrt_alpha.stability, Stability::Repulsive);
    }

    #[test]
    fn fixed_points_at_knee() {
        let alpha = 0.25f64;
        let points = beta_fixed_points(2.0 * alpha.sqrt(), alpha);
        assert_eq!(attractive(&points), vec![alpha.sqrt()]);
    }

    #[test]
    fn iteration_reaches_limit_coefficient() {
        let r = beta_iteration(1.0, 1.0, 0.1, 0.05, 1.0, 100_000, 1e-14);
        assert!(r.converged);
        assert!((r.betas.last().unwrap() - 1.0).abs() < 1e-10);
        assert!((r.x_limit - 0.55).abs() < 1e-10);
        assert!((beta_limit_reconstruction(1.0, 1.0, 0.1) - 0.55).abs() < 1e-15);
        assert_eq!(beta_limit_reconstruction(1.0, 0.04, 0.0), 1.0);
    }

    #[test]
    fn limit_differs_from_tikhonov() {
        let alpha = 1e-3;
        for sigma in [0.02, 0.1] {
            let tikhonov = sigma * sigma / (sigma * sigma + alpha);
            assert!((beta_limit_reconstruction(sigma, alpha, 0.0) - tikhonov).abs() > 0.03);
        }
    }

    #[test]
    fn optimal_beta_matches_brute_force() {
        let (sigma, alpha) = (1.0, 0.04);
        let brute = (1..=2_000_000)
            .map(|i| i as f64 * 1e-6)
            .min_by(|&a, &b| {
                let fa = (sigma * a / (a * a + alpha) - 1.0).abs();
                let fb = (sigma * b / (b * b + alpha) - 1.0).abs();
                // the upper root gives the same value; take the larger one
                fa.total_cmp(&fb).then(b.total_cmp(&a))
            })
            .unwrap();
        let beta = optimal_beta(sigma, alpha);
        assert!((beta - 0.958_257_569_495_584).abs() < 1e-12);
        assert!((brute - beta).abs() < 1e-5);
    }

    #[test]
    fn optimal_b_constant_spectrum() {
        let a = DenseMatrix::from_diag(&[0.01, 0.02, 0.005]);
        let d = svd(&a).unwrap();
        let alpha = 0.01;
        let b = optimal_b(&d, alpha);
        let expected = d.v.matmul(&d.u.transpose()).unwrap().scaled(alpha.sqrt());
        assert!(b.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn optimal_b_reproduces_soft_tsvd() {
        let a = make_integration(16).unwrap().matrix;
        let d = svd(&a).unwrap();
        let mut g = GaussianStream::new(6);
        let y = g.normal_vec(16);
        for &alpha in &[1e-4, 1e-2] {
            let x = tikhonov_solve(&optimal_b(&d, alpha), &y, alpha).unwrap();
            let f = SpectralFilter::new(FilterFamily::SoftTsvd, alpha).unwrap();
            let oracle = filtered_pseudoinverse(&d, &f, &y).unwrap();
            assert!(x.sub(&oracle).norm() <= 1e-10 * oracle.norm());
        }
    }
}
