//! Seeded draws from finite densities.
//!
//! Replication `r` of a run with master seed `s` uses ChaCha8 seeded from `s`
//! on stream `r`, so every replication's stream is fixed by `(s, r)` alone
//! and replications can run in any order or on any thread.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model_space::FiniteDensity;
use crate::scalar::Scalar;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Generator for replication `replication` under `master_seed`.
pub fn replication_rng(master_seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replication);
    rng
}

/// Draws symbols from a fixed density.
#[derive(Debug, Clone)]
pub struct SymbolSampler {
    index: WeightedIndex<f64>,
}

impl SymbolSampler {
    pub fn new<T: Scalar>(density: &FiniteDensity<T>) -> Result<Self> {
        let weights: Vec<f64> = density.probs().iter().map(|p| p.to_f64_lossy()).collect();
        let index = WeightedIndex::new(weights).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self { index })
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }

    pub fn draw_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}
