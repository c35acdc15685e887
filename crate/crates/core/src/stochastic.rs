//! Seeded random processes: Poisson arrivals and binomial memory loss.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};

/// Reproducible random stream. ChaCha output is specified bit-for-bit, so a
/// seed replays identically on every platform.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.rng.random_range(0..=i);
            items.swap(i, j);
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Poisson-distributed count with the given mean.
pub fn sample_poisson(rng: &mut RandomSource, mean: f64) -> Result<u64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::Argument(format!(
            "Poisson mean must be finite and >= 0, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(dist.sample(rng.rng()) as u64)
}

/// Number of `stored` ebits lost in one step when each survives with
/// probability `eta`: a Binomial(stored, 1 - eta) draw.
pub fn sample_losses(rng: &mut RandomSource, stored: u64, eta: f64) -> Result<u64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Argument(format!(
            "survival probability must lie in (0, 1], got {eta}"
        )));
    }
    if stored == 0 || eta == 1.0 {
        return Ok(0);
    }
    let dist = Binomial::new(stored, 1.0 - eta).map_err(|e| Error::Argument(e.to_string()))?;
    Ok(dist.sample(rng.rng()))
}

/// Per-step survival probability `exp(-dt / tau)`.
pub fn eta_from_lifetime(tau: f64, dt: f64) -> Result<f64> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::Argument(format!("lifetime must be > 0, got {tau}")));
    }
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::Argument(format!("time step must be >= 0, got {dt}")));
    }
    Ok((-dt / tau).exp())
}
