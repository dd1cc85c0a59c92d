//! Seeded random streams.
//!
//! All randomness in the crate goes through [`GaussianStream`]: a ChaCha8
//! generator (`rand_chacha::ChaCha8Rng::seed_from_u64`, a fixed algorithm
//! whose output does not depend on platform or word size) feeding a
//! Box–Muller transform. The same seed therefore yields the same noise
//! vectors everywhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Vec64;

pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform sample in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard normal sample (Box–Muller, both outputs of each pair are used).
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.next_uniform();
        let u2 = self.next_uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec64 {
        Vec64::from_fn(n, |_| self.next_normal())
    }
}
