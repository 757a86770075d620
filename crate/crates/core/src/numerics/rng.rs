use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Matrix;
use crate::error::{Error, Result};

/// Seeded pseudo-random generator. Every stochastic operation takes one of
/// these explicitly; there is no global generator.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    /// Derives an independent child generator.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }
}

/// Xavier/Glorot uniform initialization: entries in `±√(6/(rows+cols))`.
pub fn init_xavier(rng: &mut Rng, rows: usize, cols: usize) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid(format!(
            "xavier init needs non-zero dimensions, got {rows}x{cols}"
        )));
    }
    let bound = xavier_bound(rows, cols);
    Ok(Matrix::from_fn(rows, cols, |_, _| {
        rng.uniform_range(-bound, bound)
    }))
}

pub fn xavier_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}
