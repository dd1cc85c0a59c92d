//! Proximal maps `prox_{tR}(v) = argmin_x ½‖x − v‖² + t R(x)`.

use std::fmt;
use std::str::FromStr;

use crate::linalg::Vec64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProxKind {
    /// `R(x) = ½‖x‖²`
    HalfSquaredL2,
    /// `R(x) = ‖x‖₁`
    L1,
    /// Indicator of the nonnegative orthant.
    NonnegIndicator,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProxError {
    #[error("prox threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),
    #[error("unknown prox kind {0:?} (expected l2, l1 or nonneg)")]
    UnknownKind(String),
}

impl ProxKind {
    pub fn apply(self, t: f64, v: &Vec64) -> Result<Vec64, ProxError> {
        check_threshold(t)?;
        Ok(v.map(|s| self.scalar(t, s)))
    }

    pub(crate) fn scalar(self, t: f64, s: f64) -> f64 {
        match self {
            ProxKind::HalfSquaredL2 => s / (1.0 + t),
            ProxKind::L1 => s.signum() * (s.abs() - t).max(0.0),
            ProxKind::NonnegIndicator => s.max(0.0),
        }
    }

    /// Derivative of the scalar map at `s`, used for backpropagation.
    ///
    /// At the kinks of `L1` and `NonnegIndicator` the derivative is taken as
    /// 0, i.e. inactive coordinates block the gradient.
    pub fn derivative(self, t: f64, s: f64) -> f64 {
        match self {
            ProxKind::HalfSquaredL2 => 1.0 / (1.0 + t),
            ProxKind::L1 => {
                if s.abs() > t {
                    1.0
                } else {
                    0.0
                }
            }
            ProxKind::NonnegIndicator => {
                if s > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// The regularizer `R` itself, componentwise; `+∞` outside the domain.
    pub fn penalty(self, x: f64) -> f64 {
        match self {
            ProxKind::HalfSquaredL2 => 0.5 * x * x,
            ProxKind::L1 => x.abs(),
            ProxKind::NonnegIndicator => {
                if x >= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

pub(crate) fn check_threshold(t: f64) -> Result<(), ProxError> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(ProxError::NegativeThreshold(t))
    }
}

pub fn prox_apply(kind: ProxKind, t: f64, v: &Vec64) -> Result<Vec64, ProxError> {
    kind.apply(t, v)
}

impl fmt::Display for ProxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProxKind::HalfSquaredL2 => "l2",
            ProxKind::L1 => "l1",
            ProxKind::NonnegIndicator => "nonneg",
        })
    }
}

impl FromStr for ProxKind {
    type Err = ProxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "half-squared-l2" => Ok(ProxKind::HalfSquaredL2),
            "l1" => Ok(ProxKind::L1),
            "nonneg" | "relu" => Ok(ProxKind::NonnegIndicator),
            _ => Err(ProxError::UnknownKind(s.to_string())),
        }
    }
}
