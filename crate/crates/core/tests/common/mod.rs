//! Random instances and direct-summation oracles shared by the integration tests.
//!
//! The oracles here are written from the definitions and share no code with
//! the library.

#![allow(dead_code)]

use misrate_core::model_space::{FiniteDensity, ModelFamily, Prior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Normalized exponential draws; each coordinate is zeroed with probability
/// `zero_prob`, keeping at least one positive.
pub fn random_probs(rng: &mut impl Rng, k: usize, zero_prob: f64) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..k)
            .map(|_| {
                if rng.random::<f64>() < zero_prob {
                    0.0
                } else {
                    -(1.0 - rng.random::<f64>()).ln() + 1e-3
                }
            })
            .collect();
        let s: f64 = raw.iter().sum();
        if s > 0.0 {
            return raw.iter().map(|v| v / s).collect();
        }
    }
}

pub fn random_density(rng: &mut impl Rng, k: usize, zero_prob: f64) -> FiniteDensity<f64> {
    FiniteDensity::new(random_probs(rng, k, zero_prob)).unwrap()
}

pub fn random_family(rng: &mut impl Rng, k: usize, m: usize, zero_prob: f64) -> ModelFamily<f64> {
    ModelFamily::new((0..m).map(|_| random_density(rng, k, zero_prob)).collect()).unwrap()
}

pub fn random_prior(rng: &mut impl Rng, m: usize) -> Prior<f64> {
    Prior::new(random_probs(rng, m, 0.0)).unwrap()
}

pub fn kl(p0: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in p0.iter().zip(p) {
        if a > 0.0 {
            if b == 0.0 {
                return f64::INFINITY;
            }
            s += a * (a / b).ln();
        }
    }
    s
}

pub fn affinity(p0: &[f64], p: &[f64], pstar: &[f64], alpha: f64) -> f64 {
    p0.iter()
        .zip(p)
        .zip(pstar)
        .filter(|((&a, _), _)| a > 0.0)
        .map(|((&a, &b), &c)| a * (b / c).powf(alpha))
        .sum()
}

pub fn hellinger_sq(p1: &[f64], p2: &[f64], p0: &[f64], pstar: &[f64]) -> f64 {
    0.5 * p0
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(x, &a)| (p1[x].sqrt() - p2[x].sqrt()).powi(2) * a / pstar[x])
        .sum::<f64>()
}

pub fn mix(gens: &[&[f64]], w: &[f64]) -> Vec<f64> {
    (0..gens[0].len())
        .map(|x| gens.iter().zip(w).map(|(g, &wi)| wi * g[x]).sum())
        .collect()
}

/// Log posterior weights from symbol counts: `log π_i + Σ_x c_x log p_i(x)`, normalized.
pub fn direct_posterior(members: &[Vec<f64>], prior: &[f64], counts: &[u64]) -> Vec<f64> {
    let logs: Vec<f64> = members
        .iter()
        .zip(prior)
        .map(|(p, &w)| {
            let mut l = w.ln();
            for (x, &c) in counts.iter().enumerate() {
                if c > 0 {
                    l += c as f64 * p[x].ln();
                }
            }
            l
        })
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    logs.iter().map(|l| (l - m).exp() / z).collect()
}

/// Maximum of a concave function over the 2- or 3-point simplex by grid
/// search with successive zooming around the incumbent.
pub fn grid_max_simplex(dim: usize, f: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    assert!(dim == 2 || dim == 3);
    let mut center = vec![1.0 / dim as f64; dim];
    let mut half = 1.0;
    let mut best = (f64::NEG_INFINITY, center.clone());
    let steps = if dim == 2 { 2000 } else { 200 };
    for _ in 0..12 {
        let h = 2.0 * half / steps as f64;
        let lo: Vec<f64> = center.iter().map(|c| c - half).collect();
        let mut consider = |w: Vec<f64>| {
            if w.iter().all(|&v| v >= 0.0) {
                let v = f(&w);
                if v > best.0 {
                    best = (v, w);
                }
            }
        };
        if dim == 2 {
            for i in 0..=steps {
                let a = (lo[0] + i as f64 * h).clamp(0.0, 1.0);
                consider(vec![a, 1.0 - a]);
            }
        } else {
            for i in 0..=steps {
                for j in 0..=steps {
                    let a = (lo[0] + i as f64 * h).clamp(0.0, 1.0);
                    let b = (lo[1] + j as f64 * h).clamp(0.0, 1.0);
                    if a + b <= 1.0 {
                        consider(vec![a, b, 1.0 - a - b]);
                    }
                }
            }
        }
        center = best.1.clone();
        half = (4.0 * h).min(half);
    }
    best
}
