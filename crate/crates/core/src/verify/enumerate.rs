//! Exact and Monte Carlo evaluation of `E₀(∫_A R_n dΠ)^α`.
//!
//! The α-power of the integral does not factor over draws, so the exact
//! value sums over every length-`n` sequence. The sequence space is split by
//! its first symbols; partitions are summed independently and then reduced
//! in a fixed order, so the result does not depend on thread scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model_space::{FiniteDensity, IndexSet};
use crate::posterior::PosteriorModel;
use crate::sampling::{replication_rng, SymbolSampler};
use crate::scalar::Scalar;

/// Longest horizon for exhaustive enumeration.
pub const EXACT_MAX_STEPS: usize = 12;
/// Largest sequence space for exhaustive enumeration.
pub const EXACT_MAX_SEQUENCES: u64 = 10_000_000;

/// Replications per deterministic reduction chunk.
pub(crate) const MC_CHUNK: usize = 1024;

pub(crate) fn check_enumerable(alphabet: usize, n: usize) -> Result<()> {
    let too_big = || Error::EnumerationTooLarge { alphabet, n };
    if n > EXACT_MAX_STEPS {
        return Err(too_big());
    }
    let states = (alphabet as u64).checked_pow(n as u32).ok_or_else(too_big)?;
    if states > EXACT_MAX_SEQUENCES {
        return Err(too_big());
    }
    Ok(())
}

/// Restricted state: log prior + log ratio for each member of `A`.
struct Restricted<'m, 'a, T> {
    model: &'m PosteriorModel<'a, T>,
    members: Vec<usize>,
    /// increments[x][j] = log p_{members[j]}(x) − log p*(x), for x in supp p0
    increments: Vec<Vec<T>>,
    symbols: Vec<(usize, T)>,
    alpha: T,
}

impl<T: Scalar> Restricted<'_, '_, T> {
    fn leaf_value(&self, joint: &[T], log_path: T) -> T {
        let max = joint.iter().copied().fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            return T::zero();
        }
        let lse = max + joint.iter().map(|&j| (j - max).exp()).sum::<T>().ln();
        (log_path + self.alpha * lse).exp()
    }

    fn dfs(&self, joint: &mut Vec<T>, log_path: T, remaining: usize) -> T {
        if remaining == 0 {
            return self.leaf_value(joint, log_path);
        }
        let mut acc = T::zero();
        for (s, &(_, lp)) in self.symbols.iter().enumerate() {
            for (j, inc) in joint.iter_mut().zip(&self.increments[s]) {
                *j = *j + *inc;
            }
            acc = acc + self.dfs(joint, log_path + lp, remaining - 1);
            for (j, inc) in joint.iter_mut().zip(&self.increments[s]) {
                *j = *j - *inc;
            }
        }
        acc
    }
}

fn restricted<'m, 'a, T: Scalar>(
    model: &'m PosteriorModel<'a, T>,
    p0: &FiniteDensity<T>,
    set: &IndexSet,
    alpha: T,
) -> Result<Restricted<'m, 'a, T>> {
    let symbols: Vec<(usize, T)> = p0.support().map(|x| (x, p0.prob(x).ln())).collect();
    let members: Vec<usize> = set.iter().copied().collect();
    let increments = symbols
        .iter()
        .map(|&(x, _)| {
            let all = model.log_ratio_increments(x)?;
            Ok(members.iter().map(|&i| all[i]).collect())
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    Ok(Restricted {
        model,
        members,
        increments,
        symbols,
        alpha,
    })
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1]")))
    }
}

/// `E₀(∫_A R_n dΠ)^α` by exhaustive enumeration of length-`n` sequences.
pub fn exact_power_expectation<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    set: &IndexSet,
    alpha: T,
    n: usize,
) -> Result<T> {
    check_alpha(alpha)?;
    model.family().check_indices(set)?;
    check_enumerable(model.family().alphabet_size(), n)?;
    let r = restricted(model, p0, set, alpha)?;
    let log_prior: Vec<T> = r.members.iter().map(|&i| r.model.prior().weight(i).ln()).collect();
    if n == 0 {
        return Ok(r.leaf_value(&log_prior, T::zero()));
    }

    // partition by the first one or two symbols
    let depth = n.min(2);
    let m = r.symbols.len();
    let prefixes: Vec<Vec<usize>> = (0..m.pow(depth as u32))
        .map(|code| (0..depth).map(|d| code / m.pow(d as u32) % m).collect())
        .collect();
    let parts: Vec<T> = prefixes
        .par_iter()
        .map(|prefix| {
            let mut joint = log_prior.clone();
            let mut log_path = T::zero();
            for &s in prefix {
                for (j, inc) in joint.iter_mut().zip(&r.increments[s]) {
                    *j = *j + *inc;
                }
                log_path = log_path + r.symbols[s].1;
            }
            r.dfs(&mut joint, log_path, n - depth)
        })
        .collect();
    Ok(parts.into_iter().fold(T::zero(), |a, b| a + b))
}

/// Monte Carlo mean of `(∫_A R_k dΠ)^α` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurveEstimate<T> {
    pub means: Vec<T>,
    pub std_errors: Vec<T>,
    pub replications: usize,
}

/// Estimates `E₀(∫_A R_k dΠ)^α` for every `k ≤ n` from independent paths.
/// Replication `r` uses stream `r` of `seed`.
pub fn mc_power_curve<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    set: &IndexSet,
    alpha: T,
    n: usize,
    replications: usize,
    seed: u64,
) -> Result<PowerCurveEstimate<T>> {
    let (sum, sum_sq, _) = mc_paths(model, p0, set, alpha, n, replications, seed, |_, _| Ok(false))?;
    Ok(summarize(sum, sum_sq, replications))
}

pub(crate) fn summarize<T: Scalar>(sum: Vec<T>, sum_sq: Vec<T>, replications: usize) -> PowerCurveEstimate<T> {
    let r = T::from_usize(replications).unwrap();
    let means: Vec<T> = sum.iter().map(|&s| s / r).collect();
    let std_errors = if replications > 1 {
        let r1 = T::from_usize(replications - 1).unwrap();
        means
            .iter()
            .zip(&sum_sq)
            .map(|(&mean, &sq)| ((sq - r * mean * mean).max(T::zero()) / r1 / r).sqrt())
            .collect()
    } else {
        vec![T::infinity(); means.len()]
    };
    PowerCurveEstimate {
        means,
        std_errors,
        replications,
    }
}

/// Runs `replications` paths of length `n`, accumulating Σv and Σv² of
/// `v_k = (∫_A R_k dΠ)^α`, and counting steps where `per_step(state, log v_k / α)` flags.
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
pub(crate) fn mc_paths<T: Scalar, F>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    set: &IndexSet,
    alpha: T,
    n: usize,
    replications: usize,
    seed: u64,
    per_step: F,
) -> Result<(Vec<T>, Vec<T>, usize)>
where
    F: Fn(&crate::posterior::PosteriorState<T>, T) -> Result<bool> + Sync,
{
    check_alpha(alpha)?;
    model.family().check_indices(set)?;
    if replications == 0 {
        return Err(Error::Domain("Monte Carlo needs at least one replication".into()));
    }
    let sampler = SymbolSampler::new(p0)?;
    let chunks = replications.div_ceil(MC_CHUNK);
    let partial: Vec<Result<(Vec<T>, Vec<T>, usize)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![T::zero(); n + 1];
            let mut sum_sq = vec![T::zero(); n + 1];
            let mut flagged = 0usize;
            let end = ((c + 1) * MC_CHUNK).min(replications);
            for rep in c * MC_CHUNK..end {
                let mut rng = replication_rng(seed, rep as u64);
                let mut state = model.init();
                for k in 0..=n {
                    if k > 0 {
                        model.update_in_place(&mut state, sampler.draw(&mut rng))?;
                    }
                    let log_l = model.log_integral(&state, set);
                    let v = (alpha * log_l).exp();
                    sum[k] = sum[k] + v;
                    sum_sq[k] = sum_sq[k] + v * v;
                    if k < n && per_step(&state, log_l)? {
                        flagged += 1;
                    }
                }
            }
            Ok((sum, sum_sq, flagged))
        })
        .collect();

    let mut sum = vec![T::zero(); n + 1];
    let mut sum_sq = vec![T::zero(); n + 1];
    let mut flagged = 0;
    for p in partial {
        let (s, q, f) = p?;
        for k in 0..=n {
            sum[k] = sum[k] + s[k];
            sum_sq[k] = sum_sq[k] + q[k];
        }
        flagged += f;
    }
    Ok((sum, sum_sq, flagged))
}
