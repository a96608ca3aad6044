//! Counter-based random streams.
//!
//! Every random draw in the crate is addressed by a coordinate
//! `(seed, run, iteration, particle)`. The coordinate is used directly as the
//! 256-bit ChaCha key, so two draws with the same coordinate produce the same
//! sequence no matter which thread asks for them or in which order. Within one
//! coordinate the draw counter is simply the position in the ChaCha stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A family of independent, reproducible random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    run: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, run: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn run(&self) -> u64 {
        self.run
    }

    /// Same seed, different run id. Used to separate the streams of
    /// independent consumers (initial population, optimizer, diagnostics).
    pub fn with_run(self, run: u64) -> Self {
        Self { run, ..self }
    }

    /// The generator for one `(iteration, particle)` coordinate.
    pub fn at(&self, iteration: u64, particle: u64) -> StreamRng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.run.to_le_bytes());
        key[16..24].copy_from_slice(&iteration.to_le_bytes());
        key[24..32].copy_from_slice(&particle.to_le_bytes());
        StreamRng {
            inner: ChaCha8Rng::from_seed(key),
        }
    }
}

/// Generator positioned at the start of one stream coordinate.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.standard_normal();
        }
    }

    pub fn standard_normals(&mut self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        self.fill_standard_normal(&mut v);
        v
    }

    /// Uniform draw on `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.inner.random::<f64>()
    }

    /// Uniform integer on the inclusive range `[low, high]`.
    pub fn uniform_int(&mut self, low: usize, high: usize) -> usize {
        self.inner.random_range(low..=high)
    }
}
