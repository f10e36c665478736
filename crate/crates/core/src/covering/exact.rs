//! Exact covering numbers for small targets.
//!
//! Feasibility is downward closed (a sub-hull of a certified hull is
//! certified), so a minimum cover can be taken to be a partition into
//! feasible blocks. Feasibility is computed layer by layer over subset size,
//! testing a subset only when all its maximal proper subsets passed, and the
//! minimum partition follows by dynamic programming over subsets.

use rayon::prelude::*;

use super::{certify_element, certify_singletons};
use crate::error::{Error, Result};
use crate::model_space::{FiniteDensity, IndexSet, ModelFamily};
use crate::scalar::Scalar;

/// Largest target the exhaustive search accepts.
pub const EXACT_MAX_TARGETS: usize = 12;

/// Minimum number of certified convex hulls of family members covering `target`.
pub fn covering_number_exact<T: Scalar>(
    target: &IndexSet,
    family: &ModelFamily<T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    alpha: T,
    threshold: T,
    max_size: usize,
) -> Result<usize> {
    if max_size > EXACT_MAX_TARGETS {
        return Err(Error::Domain(format!(
            "max_size {max_size} exceeds the exact-search limit {EXACT_MAX_TARGETS}"
        )));
    }
    if target.len() > max_size {
        return Err(Error::TargetTooLarge {
            size: target.len(),
            max: max_size,
        });
    }
    family.check_indices(target)?;
    let targets: Vec<usize> = target.iter().copied().collect();
    let k = targets.len();
    if k == 0 {
        return Ok(0);
    }
    certify_singletons(&targets, family, p0, pstar, alpha, threshold)?;

    let full = (1usize << k) - 1;
    let mut feasible = vec![false; full + 1];
    for b in 0..k {
        feasible[1 << b] = true;
    }
    for size in 2..=k {
        let layer: Vec<usize> = (1..=full)
            .filter(|m| m.count_ones() as usize == size)
            .filter(|&m| (0..k).filter(|b| m >> b & 1 == 1).all(|b| feasible[m & !(1 << b)]))
            .collect();
        let verdicts: Vec<Result<bool>> = layer
            .par_iter()
            .map(|&m| {
                let gens: IndexSet = (0..k).filter(|b| m >> b & 1 == 1).map(|b| targets[b]).collect();
                Ok(certify_element(&gens, family, p0, pstar, alpha, threshold)?.is_certified())
            })
            .collect();
        for (m, v) in layer.into_iter().zip(verdicts) {
            feasible[m] = v?;
        }
    }

    let mut best = vec![usize::MAX; full + 1];
    best[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        // enumerate sub ⊆ rest, block = sub | low
        let mut sub = rest;
        loop {
            let block = sub | low;
            if feasible[block] {
                let prev = best[mask ^ block];
                if prev != usize::MAX {
                    best[mask] = best[mask].min(prev + 1);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    Ok(best[full])
}
