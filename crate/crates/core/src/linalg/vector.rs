use std::fmt;
use std::ops::{Deref, DerefMut};

/// Dense real vector.
///
/// Thin wrapper over `Vec<f64>` that carries the vector-space operations the
/// solvers need. Length mismatches in the arithmetic helpers are programming
/// errors and panic; the public entry points of the other modules validate
/// shapes before reaching them.
#[derive(Clone, PartialEq, Default)]
pub struct Vec64(Vec<f64>);

impl Vec64 {
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..n).map(f).collect())
    }

    /// Canonical basis vector `e_i` of length `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = 1.0;
        v
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Vec64) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &Vec64) -> f64 {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Vec64) -> f64 {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `self += a · x`
    pub fn axpy(&mut self, a: f64, x: &Vec64) {
        assert_eq!(self.len(), x.len(), "vector length mismatch");
        for (s, v) in self.0.iter_mut().zip(&x.0) {
            *s += a * v;
        }
    }

    pub fn scaled(&self, a: f64) -> Vec64 {
        Self(self.0.iter().map(|v| a * v).collect())
    }

    pub fn add(&self, other: &Vec64) -> Vec64 {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vec64) -> Vec64 {
        assert_eq!(self.len(), other.len(), "vector length mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vec64 {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Deref for Vec64 {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vec64 {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vec64 {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for Vec64 {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<f64> for Vec64 {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Debug for Vec64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}
