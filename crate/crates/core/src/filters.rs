//! Spectral filters `F_α(σ)` and the regularized inverses they define.

use std::fmt;
use std::str::FromStr;

use crate::linalg::{Svd, Vec64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterFamily {
    Tikhonov,
    Tsvd,
    SoftTsvd,
}

impl FilterFamily {
    pub const ALL: [FilterFamily; 3] = [
        FilterFamily::Tikhonov,
        FilterFamily::Tsvd,
        FilterFamily::SoftTsvd,
    ];

    /// Numeric code used in CSV output: 0 tikhonov, 1 tsvd, 2 soft_tsvd.
    pub fn code(self) -> u8 {
        match self {
            FilterFamily::Tikhonov => 0,
            FilterFamily::Tsvd => 1,
            FilterFamily::SoftTsvd => 2,
        }
    }

    /// Constants `(γ, c₁, c₂, c₃)` for the three order-optimality conditions.
    pub fn optimality_constants(self, nu: f64) -> OptimalityConstants {
        match self {
            FilterFamily::SoftTsvd | FilterFamily::Tikhonov => OptimalityConstants {
                gamma: 0.5,
                c1: 0.5,
                c2: 2f64.powf(nu),
                c3: 1.0,
            },
            FilterFamily::Tsvd => OptimalityConstants {
                gamma: 1.0,
                c1: 1.0,
                c2: 1.0,
                c3: 1.0,
            },
        }
    }
}

impl fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterFamily::Tikhonov => "tikhonov",
            FilterFamily::Tsvd => "tsvd",
            FilterFamily::SoftTsvd => "soft_tsvd",
        })
    }
}

impl FromStr for FilterFamily {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tikhonov" => Ok(FilterFamily::Tikhonov),
            "tsvd" => Ok(FilterFamily::Tsvd),
            "soft_tsvd" | "softtsvd" => Ok(FilterFamily::SoftTsvd),
            _ => Err(FilterError::UnknownFamily(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("filter parameter alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("singular value must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("sigma grid is empty")]
    EmptyGrid,
    #[error("data has length {got}, operator range has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown filter family {0:?} (expected tikhonov, tsvd or soft_tsvd)")]
    UnknownFamily(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralFilter {
    family: FilterFamily,
    alpha: f64,
}

impl SpectralFilter {
    pub fn new(family: FilterFamily, alpha: f64) -> Result<Self, FilterError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(FilterError::InvalidAlpha(alpha));
        }
        Ok(Self { family, alpha })
    }

    pub fn family(&self) -> FilterFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn value(&self, sigma: f64) -> Result<f64, FilterError> {
        if sigma.is_nan() || sigma < 0.0 {
            return Err(FilterError::NegativeSigma(sigma));
        }
        Ok(self.eval(sigma))
    }

    fn eval(&self, sigma: f64) -> f64 {
        let alpha = self.alpha;
        match self.family {
            FilterFamily::Tikhonov => sigma * sigma / (sigma * sigma + alpha),
            FilterFamily::Tsvd => {
                if sigma >= alpha {
                    1.0
                } else {
                    0.0
                }
            }
            FilterFamily::SoftTsvd => {
                let knee = 2.0 * alpha.sqrt();
                if sigma >= knee {
                    1.0
                } else {
                    sigma / knee
                }
            }
        }
    }
}

pub fn filter_value(f: &SpectralFilter, sigma: f64) -> Result<f64, FilterError> {
    f.value(sigma)
}

/// `x = Σ F_α(σᵢ) σᵢ⁻¹ ⟨y, vᵢ⟩ uᵢ`, skipping terms with `σᵢ = 0`.
pub fn filtered_pseudoinverse(
    svd: &Svd,
    f: &SpectralFilter,
    y: &Vec64,
) -> Result<Vec64, FilterError> {
    if y.len() != svd.v.rows() {
        return Err(FilterError::DimensionMismatch {
            expected: svd.v.rows(),
            got: y.len(),
        });
    }
    let mut x = Vec64::zeros(svd.u.rows());
    for (i, &sigma) in svd.sigma.iter().enumerate() {
        if sigma == 0.0 {
            continue;
        }
        let coeff = f.eval(sigma) / sigma * svd.v_col(i).dot(y);
        x.axpy(coeff, &svd.u_col(i));
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityConstants {
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// Grid suprema of the three order-optimality conditions
///
/// 1. `sup |F_α(σ)/σ| ≤ c₁ α^{−γ}`
/// 2. `sup |1 − F_α(σ)| σ^ν ≤ c₂ α^{γν}`
/// 3. `sup |F_α(σ)| ≤ c₃`
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub family: FilterFamily,
    pub alpha: f64,
    pub nu: f64,
    pub gamma: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub sup: [f64; 3],
    pub bound: [f64; 3],
    pub worst_sigma: [f64; 3],
    pub cond1_ok: bool,
    pub cond2_ok: bool,
    pub cond3_ok: bool,
}

impl OptimalityReport {
    pub fn all_ok(&self) -> bool {
        self.cond1_ok && self.cond2_ok && self.cond3_ok
    }
}

/// Relative slack for comparing a supremum with its bound; the conditions
/// are attained with equality on parts of the grid for several families.
const BOUND_SLACK: f64 = 1e-12;

pub fn check_order_optimality(
    f: &SpectralFilter,
    nu: f64,
    sigma_grid: &Vec64,
) -> Result<OptimalityReport, FilterError> {
    if sigma_grid.is_empty() {
        return Err(FilterError::EmptyGrid);
    }
    let k = f.family.optimality_constants(nu);
    let alpha = f.alpha;
    let mut sup = [f64::NEG_INFINITY; 3];
    let mut worst_sigma = [0.0; 3];
    for &sigma in sigma_grid.iter() {
        let value = f.value(sigma)?;
        let terms = [
            (value / sigma).abs(),
            (1.0 - value).abs() * sigma.powf(nu),
            value.abs(),
        ];
        for c in 0..3 {
            if terms[c] > sup[c] {
                sup[c] = terms[c];
                worst_sigma[c] = sigma;
            }
        }
    }
    let bound = [
        k.c1 * alpha.powf(-k.gamma),
        k.c2 * alpha.powf(k.gamma * nu),
        k.c3,
    ];
    let ok = |c: usize| sup[c] <= bound[c] * (1.0 + BOUND_SLACK);
    Ok(OptimalityReport {
        family: f.family,
        alpha,
        nu,
        gamma: k.gamma,
        c1: k.c1,
        c2: k.c2,
        c3: k.c3,
        sup,
        bound,
        worst_sigma,
        cond1_ok: ok(0),
        cond2_ok: ok(1),
        cond3_ok: ok(2),
    })
}

/// `points` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, points: usize) -> Vec64 {
    match points {
        0 => Vec64::zeros(0),
        1 => Vec64::from_vec(vec![lo]),
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (points - 1) as f64;
            Vec64::from_fn(points, |i| {
                if i == points - 1 {
                    hi
                } else {
                    (a + step * i as f64).exp()
                }
            })
        }
    }
}

/// Logarithmic grid on `[1e-6, 10]` with 2000 points.
pub fn default_sigma_grid() -> Vec64 {
    logspace(1e-6, 10.0, 2000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{solve_spd, svd, DenseMatrix};
    use crate::rng::GaussianStream;

    fn soft(alpha: f64) -> SpectralFilter {
        SpectralFilter::new(FilterFamily::SoftTsvd, alpha).unwrap()
    }

    #[test]
    fn soft_tsvd_values() {
        for &alpha in &[1e-4, 0.04, 1.0, 3.0] {
            let f = soft(alpha);
            assert_eq!(f.value(2.0 * alpha.sqrt()).unwrap(), 1.0);
            assert_eq!(f.value(0.0).unwrap(), 0.0);
        }
        assert!((soft(0.04).value(0.2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn soft_tsvd_matches_composition_with_optimal_beta() {
        // σβ/(β²+α) with β from a brute-force fit of that expression to 1
        let (alpha, sigma) = (0.04, 0.2);
        let beta = (1..=400_000)
            .map(|i| i as f64 * 1e-6)
            .min_by(|&a, &b| {
                let fa = (sigma * a / (a * a + alpha) - 1.0).abs();
                let fb = (sigma * b / (b * b + alpha) - 1.0).abs();
                fa.total_cmp(&fb)
            })
            .unwrap();
        assert!((beta - alpha.sqrt()).abs() < 1e-5);
        let composed = sigma * beta / (beta * beta + alpha);
        assert!((composed - soft(alpha).value(sigma).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn tsvd_and_tikhonov_values() {
        let t = SpectralFilter::new(FilterFamily::Tsvd, 0.1).unwrap();
        assert_eq!(t.value(0.1).unwrap(), 1.0);
        assert_eq!(t.value(0.0999).unwrap(), 0.0);
        let k = SpectralFilter::new(FilterFamily::Tikhonov, 1.0).unwrap();
        assert_eq!(k.value(1.0).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            SpectralFilter::new(FilterFamily::Tsvd, 0.0),
            Err(FilterError::InvalidAlpha(0.0))
        );
        assert!(SpectralFilter::new(FilterFamily::Tsvd, f64::NAN).is_err());
        assert_eq!(soft(1.0).value(-1.0), Err(FilterError::NegativeSigma(-1.0)));
        assert_eq!(
            check_order_optimality(&soft(1.0), 1.0, &Vec64::zeros(0)),
            Err(FilterError::EmptyGrid)
        );
    }

    #[test]
    fn tikhonov_pseudoinverse_on_identity() {
        let d = svd(&DenseMatrix::identity(3)).unwrap();
        let f = SpectralFilter::new(FilterFamily::Tikhonov, 1.0).unwrap();
        let x = filtered_pseudoinverse(&d, &f, &Vec64::basis(3, 0).scaled(2.0)).unwrap();
        assert!(x.max_abs_diff(&Vec64::basis(3, 0)) < 1e-15);
    }

    #[test]
    fn soft_tsvd_above_knee_is_least_squares() {
        let a = DenseMatrix::from_rows(&[&[2.0, 0.5], &[0.0, 1.5]]);
        let d = svd(&a).unwrap();
        let y = Vec64::from_vec(vec![1.0, -3.0]);
        let x = filtered_pseudoinverse(&d, &soft(1e-4), &y).unwrap();
        assert!(a.mul_vec(&x).max_abs_diff(&y) < 1e-13);
    }

    #[test]
    fn tikhonov_pseudoinverse_solves_normal_equations() {
        let mut g = GaussianStream::new(11);
        let a = DenseMatrix::from_fn(8, 8, |_, _| g.next_normal());
        let y = g.normal_vec(8);
        let alpha = 0.3;
        let f = SpectralFilter::new(FilterFamily::Tikhonov, alpha).unwrap();
        let x = filtered_pseudoinverse(&svd(&a).unwrap(), &f, &y).unwrap();
        let mut m = a.gram();
        m.add_diagonal(alpha);
        let oracle = solve_spd(&m, &a.tr_mul_vec(&y)).unwrap();
        assert!(x.max_abs_diff(&oracle) <= 1e-9);
    }

    #[test]
    fn pseudoinverse_checks_dimensions() {
        let d = svd(&DenseMatrix::identity(3)).unwrap();
        assert!(filtered_pseudoinverse(&d, &soft(1.0), &Vec64::zeros(2)).is_err());
    }

    #[test]
    fn soft_tsvd_is_order_optimal() {
        let grid = default_sigma_grid();
        for &nu in &[0.5, 1.0, 2.0] {
            let r = check_order_optimality(&soft(1e-3), nu, &grid).unwrap();
            assert!(r.all_ok(), "{r:?}");
            assert_eq!(r.sup[2], 1.0);
        }
    }

    #[test]
    fn tikhonov_saturates_above_two() {
        let grid = default_sigma_grid();
        let f = SpectralFilter::new(FilterFamily::Tikhonov, 1e-4).unwrap();
        let r = check_order_optimality(&f, 3.0, &grid).unwrap();
        assert!(!r.cond2_ok);
        assert!(r.cond1_ok && r.cond3_ok);
        assert!(check_order_optimality(&f, 1.0, &grid).unwrap().all_ok());
    }

    #[test]
    fn tsvd_constants_hold() {
        let f = SpectralFilter::new(FilterFamily::Tsvd, 1e-2).unwrap();
        for &nu in &[0.5, 1.0, 4.0] {
            assert!(check_order_optimality(&f, nu, &default_sigma_grid())
                .unwrap()
                .all_ok());
        }
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(1e-6, 10.0, 2000);
        assert_eq!(g.len(), 2000);
        assert!((g[0] - 1e-6).abs() < 1e-20);
        assert_eq!(g[1999], 10.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn family_names_round_trip() {
        for fam in FilterFamily::ALL {
            assert_eq!(fam.to_string().parse::<FilterFamily>().unwrap(), fam);
        }
        assert_eq!(
            "soft-tsvd".parse::<FilterFamily>().unwrap(),
            FilterFamily::SoftTsvd
        );
    }
}
