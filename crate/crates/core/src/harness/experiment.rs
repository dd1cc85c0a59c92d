use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{CsvTable, HarnessError};
use crate::deep_prior::{descend_b, tikhonov_solve, DeepPriorProblem, DescentConfig};
use crate::filters::{check_order_optimality, logspace, FilterFamily, SpectralFilter};
use crate::linalg::{svd, DenseMatrix, Svd, Vec64};
use crate::operators::{grid, make_integration};
use crate::prox::ProxKind;
use crate::rng::GaussianStream;
use crate::solvers::{default_step, landweber};

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// Noise scale `δ` in `y = A x† + δτ`.
    Delta(f64),
    /// `δ` chosen so that the measured SNR equals this value.
    TargetSnrDb(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum XDaggerKind {
    /// Right singular vector `u_i` of the forward operator (0-based index,
    /// singular values in decreasing order).
    SingularVector(usize),
    /// Whitespace or comma separated values read from a file.
    Custom(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub x_dagger: XDaggerKind,
    pub prox: ProxKind,
    pub descent: DescentConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 200,
            alphas: vec![1e-3, 1e-2],
            noise: NoiseSpec::TargetSnrDb(17.06),
            seed: 0,
            x_dagger: XDaggerKind::SingularVector(4),
            prox: ProxKind::HalfSquaredL2,
            descent: DescentConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.alphas.is_empty() {
            return bad("at least one alpha is required".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return bad(format!("alpha must be positive, got {a}"));
        }
        match self.noise {
            NoiseSpec::Delta(d) if !(d >= 0.0 && d.is_finite()) => {
                bad(format!("delta must be nonnegative, got {d}"))
            }
            NoiseSpec::TargetSnrDb(s) if !s.is_finite() => bad(format!("invalid target SNR {s}")),
            _ => Ok(()),
        }
    }
}

/// Generated measurement for one experiment.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: DenseMatrix,
    pub svd: Svd,
    pub x_dagger: Vec64,
    pub y_delta: Vec64,
    pub delta: f64,
    pub snr_db: f64,
}

/// `10 log₁₀(‖signal‖² / ‖noise‖²)`; `+∞` for zero noise.
pub fn snr_db(signal: &Vec64, noise: &Vec64) -> f64 {
    let noise = noise.norm_sq();
    if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal.norm_sq() / noise).log10()
    }
}

fn read_vector(path: &Path, n: usize) -> Result<Vec64, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let values = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| {
                HarnessError::InvalidConfig(format!("{}: cannot parse {t:?}", path.display()))
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if values.len() != n {
        return Err(HarnessError::InvalidConfig(format!(
            "{}: expected {n} values, found {}",
            path.display(),
            values.len()
        )));
    }
    let v = Vec64::from_vec(values);
    if !v.is_finite() {
        return Err(HarnessError::InvalidConfig(format!(
            "{}: non-finite value",
            path.display()
        )));
    }
    Ok(v)
}

/// Integration operator, true solution and noisy data `y = A x† + δτ` with
/// `τ` standard normal from the configured seed.
pub fn make_problem(cfg: &ExperimentConfig) -> Result<Problem, HarnessError> {
    cfg.validate()?;
    let a = make_integration(cfg.n)
        .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?
        .matrix;
    let svd = svd(&a)?;
    let x_dagger = match &cfg.x_dagger {
        XDaggerKind::SingularVector(i) => {
            if *i >= cfg.n {
                return Err(HarnessError::InvalidConfig(format!(
                    "singular vector index {i} out of range for n = {}",
                    cfg.n
                )));
            }
            svd.u_col(*i)
        }
        XDaggerKind::Custom(path) => read_vector(path, cfg.n)?,
    };
    let signal = a.mul_vec(&x_dagger);
    let tau = GaussianStream::new(cfg.seed).normal_vec(cfg.n);
    let delta = match cfg.noise {
        NoiseSpec::Delta(d) => d,
        // SNR is strictly decreasing in δ, so the target is met in closed form.
        NoiseSpec::TargetSnrDb(s) => signal.norm() / (tau.norm() * 10f64.powf(s / 20.0)),
    };
    let noise = tau.scaled(delta);
    let y_delta = signal.add(&noise);
    Ok(Problem {
        snr_db: snr_db(&signal, &noise),
        a,
        svd,
        x_dagger,
        y_delta,
        delta,
    })
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub alpha: f64,
    pub final_true_error: f64,
    pub tikhonov_true_error: f64,
    pub snr_db: f64,
}

fn alpha_tag(alpha: f64) -> String {
    format!("{alpha:e}")
}

/// Runs the descent for every `α` and writes `trace_<α>.csv`,
/// `recon_<α>.csv`, `b_opt_<α>.csv` and `summary.csv` into `outdir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    outdir: &Path,
) -> Result<Vec<SummaryRow>, HarnessError> {
    let problem = make_problem(cfg)?;
    std::fs::create_dir_all(outdir).map_err(|e| HarnessError::io(outdir, e))?;
    let lambda = default_step(&problem.a);
    let t = grid(cfg.n);

    let rows = cfg
        .alphas
        .par_iter()
        .enumerate()
        .map(|(index, &alpha)| {
            let p = DeepPriorProblem::new(
                problem.a.clone(),
                problem.y_delta.clone(),
                alpha,
                cfg.prox,
                lambda,
            )?;
            let descent = DescentConfig {
                seed: cfg.descent.seed.wrapping_add(index as u64),
                ..cfg.descent
            };
            let trace = descend_b(&p, &descent, Some(&problem.x_dagger))?;
            let x_tik = tikhonov_solve(&problem.a, &problem.y_delta, alpha)?;
            let tag = alpha_tag(alpha);

            let mut tt = CsvTable::new(&["iter", "true_error", "objective", "frob_sq"])
                .with_integer_columns(&["iter"]);
            let errors = trace.true_error.as_deref().unwrap_or_default();
            for (k, ((e, f), d)) in errors
                .iter()
                .zip(&trace.objective)
                .zip(&trace.frob_sq)
                .enumerate()
            {
                tt.push_row(vec![k as f64, *e, *f, *d])?;
            }
            tt.write_path(&outdir.join(format!("trace_{tag}.csv")))?;

            let mut recon = CsvTable::new(&["t", "x_dagger", "x_tikhonov", "x_bopt"]);
            for i in 0..cfg.n {
                recon.push_row(vec![t[i], problem.x_dagger[i], x_tik[i], trace.x_opt[i]])?;
            }
            recon.write_path(&outdir.join(format!("recon_{tag}.csv")))?;

            let header: Vec<String> = (0..trace.b_opt.cols()).map(|j| format!("c{j}")).collect();
            let mut b = CsvTable::new(&header);
            for i in 0..trace.b_opt.rows() {
                b.push_row(trace.b_opt.row(i).to_vec())?;
            }
            b.write_path(&outdir.join(format!("b_opt_{tag}.csv")))?;

            Ok(SummaryRow {
                alpha,
                final_true_error: trace.x_opt.distance(&problem.x_dagger),
                tikhonov_true_error: x_tik.distance(&problem.x_dagger),
                snr_db: problem.snr_db,
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let mut summary =
        CsvTable::new(&["alpha", "final_true_error", "tikhonov_true_error", "snr_db"])
            .allow_infinite(&["snr_db"]);
    for r in &rows {
        summary.push_row(vec![
            r.alpha,
            r.final_true_error,
            r.tikhonov_true_error,
            r.snr_db,
        ])?;
    }
    summary.write_path(&outdir.join("summary.csv"))?;
    Ok(rows)
}

/// Logarithmic σ grid on `[lo, hi]` merged with the Soft-TSVD knees `2√α`
/// that fall inside it.
pub fn filter_sigma_grid(alphas: &[f64], lo: f64, hi: f64, points: usize) -> Vec64 {
    let mut values = logspace(lo, hi, points).into_vec();
    values.extend(
        alphas
            .iter()
            .map(|a| 2.0 * a.sqrt())
            .filter(|k| (lo..=hi).contains(k)),
    );
    values.sort_by(f64::total_cmp);
    values.dedup();
    Vec64::from_vec(values)
}

/// Long-format filter responses: one row per `(α, σ)` with columns
/// `alpha, sigma, tikhonov, tsvd, soft_tsvd`.
pub fn export_filter_response(
    alphas: &[f64],
    sigma_grid: &Vec64,
    outpath: Option<&Path>,
) -> Result<CsvTable, HarnessError> {
    if sigma_grid.is_empty() {
        return Err(HarnessError::InvalidConfig("sigma grid is empty".into()));
    }
    let mut table = CsvTable::new(&["alpha", "sigma", "tikhonov", "tsvd", "soft_tsvd"]);
    for &alpha in alphas {
        let filters = FilterFamily::ALL
            .iter()
            .map(|&f| SpectralFilter::new(f, alpha))
            .collect::<Result<Vec<_>, _>>()?;
        for &sigma in sigma_grid.iter() {
            let mut row = vec![alpha, sigma];
            for f in &filters {
                row.push(f.value(sigma)?);
            }
            table.push_row(row)?;
        }
    }
    if let Some(path) = outpath {
        table.write_path(path)?;
    }
    Ok(table)
}

/// Order-optimality report for every filter family and `ν`. The `family`
/// column holds [`FilterFamily::code`]; condition flags are 0/1.
pub fn optimality_table(
    alpha: f64,
    nus: &[f64],
    sigma_grid: &Vec64,
) -> Result<CsvTable, HarnessError> {
    let header = [
        "family",
        "alpha",
        "nu",
        "gamma",
        "c1",
        "c2",
        "c3",
        "sup1",
        "sup2",
        "sup3",
        "bound1",
        "bound2",
        "bound3",
        "worst_sigma1",
        "worst_sigma2",
        "worst_sigma3",
        "cond1_ok",
        "cond2_ok",
        "cond3_ok",
    ];
    let mut table = CsvTable::new(&header)
        .with_integer_columns(&["family", "cond1_ok", "cond2_ok", "cond3_ok"]);
    for family in FilterFamily::ALL {
        let f = SpectralFilter::new(family, alpha)?;
        for &nu in nus {
            let r = check_order_optimality(&f, nu, sigma_grid)?;
            let mut row = vec![
                f64::from(family.code()),
                alpha,
                nu,
                r.gamma,
                r.c1,
                r.c2,
                r.c3,
            ];
            row.extend(r.sup);
            row.extend(r.bound);
            row.extend(r.worst_sigma);
            row.extend([r.cond1_ok, r.cond2_ok, r.cond3_ok].map(|b| f64::from(u8::from(b))));
            table.push_row(row)?;
        }
    }
    Ok(table)
}

/// Landweber run on the integration operator with a singular-vector true
/// solution; columns `iter, residual, true_error` (iteration 0 is the start).
pub fn landweber_table(
    n: usize,
    eta: f64,
    iters: usize,
    index: usize,
    delta: f64,
    seed: u64,
) -> Result<CsvTable, HarnessError> {
    let cfg = ExperimentConfig {
        n,
        noise: NoiseSpec::Delta(delta),
        seed,
        x_dagger: XDaggerKind::SingularVector(index),
        ..ExperimentConfig::default()
    };
    let problem = make_problem(&cfg)?;
    let x0 = Vec64::zeros(n);
    let run = landweber(&problem.a, &problem.y_delta, &x0, eta, iters)?;
    let mut table =
        CsvTable::new(&["iter", "residual", "true_error"]).with_integer_columns(&["iter"]);
    for (k, x) in std::iter::once(&x0).chain(&run.trace).enumerate() {
        let residual = problem.a.mul_vec(x).distance(&problem.y_delta);
        table.push_row(vec![k as f64, residual, x.distance(&problem.x_dagger)])?;
    }
    Ok(table)
}
