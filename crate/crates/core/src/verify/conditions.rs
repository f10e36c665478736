//! Prior-mass and evidence conditions behind the contraction bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::covering::{build_cover, build_shells, build_target_set, CoveringReport};
use crate::error::{Error, Result};
use crate::model_space::{kl_neighborhood_mass, FiniteDensity};
use crate::posterior::PosteriorModel;
use crate::sampling::{replication_rng, SymbolSampler, Z99};
use crate::scalar::Scalar;

/// Slack below which a boundary case still counts as holding.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceEventRow {
    pub n: usize,
    pub n_eps_sq: f64,
    /// Fraction of replications with `I_n ≥ Π(B) e^{-nε²(1+C)}`.
    pub frequency: f64,
    /// 99% binomial half-width.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceEventReport {
    pub eps: f64,
    pub c: f64,
    pub neighborhood_mass: f64,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<EvidenceEventRow>,
}

/// Empirical frequency of the evidence lower-bound event
/// `{ I_n ≥ Π(B(ε, P*; P₀)) e^{-nε²(1+C)} }` along `n_grid`.
#[allow(clippy::too_many_arguments)]
pub fn check_evidence_event<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    eps: T,
    c: T,
    replications: usize,
    n_grid: &[usize],
    seed: u64,
) -> Result<EvidenceEventReport> {
    if replications == 0 {
        return Err(Error::Domain("need at least one replication".into()));
    }
    let nb = kl_neighborhood_mass(model.family(), model.prior(), p0, model.pstar(), eps)?;
    if !(nb > T::zero()) {
        return Err(Error::EmptyNeighborhood);
    }
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let horizon = grid.last().copied().unwrap_or(0);
    let log_nb = nb.ln();
    let e2 = eps * eps;
    let sampler = SymbolSampler::new(p0)?;

    let hits: Vec<Result<Vec<bool>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r as u64);
            let mut state = model.init();
            let mut out = Vec::with_capacity(grid.len());
            let mut next = grid.iter().peekable();
            for n in 0..=horizon {
                if n > 0 {
                    model.update_in_place(&mut state, sampler.draw(&mut rng))?;
                }
                while next.peek() == Some(&&n) {
                    next.next();
                    let bound = log_nb - T::from_usize(n).unwrap() * e2 * (T::one() + c);
                    out.push(model.log_evidence(&state) >= bound);
                }
            }
            Ok(out)
        })
        .collect();

    let mut counts = vec![0usize; grid.len()];
    for h in hits {
        for (c, hit) in counts.iter_mut().zip(h?) {
            *c += hit as usize;
        }
    }
    let rf = replications as f64;
    let rows = grid
        .iter()
        .zip(counts)
        .map(|(&n, k)| {
            let f = k as f64 / rf;
            EvidenceEventRow {
                n,
                n_eps_sq: n as f64 * e2.to_f64_lossy(),
                frequency: f,
                half_width: Z99 * (f * (1.0 - f) / rf).sqrt(),
            }
        })
        .collect();
    Ok(EvidenceEventReport {
        eps: eps.to_f64_lossy(),
        c: c.to_f64_lossy(),
        neighborhood_mass: nb.to_f64_lossy(),
        replications,
        seed,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorRatioRow<T> {
    pub j: usize,
    pub shell_mass: T,
    pub neighborhood_mass: T,
    /// `log(Π(shell)/Π(B))`; `-inf` for an empty shell.
    pub log_ratio: T,
    /// `nε²J²/8`.
    pub log_bound: T,
    pub holds: bool,
}

/// For `J = 1..=j_max`: `Π(Jε ≤ d < 2Jε) / Π(B(ε, P*; P₀)) ≤ e^{nε²J²/8}`.
pub fn check_prior_ratio_condition<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    eps_n: T,
    n: usize,
    j_max: usize,
) -> Result<Vec<PriorRatioRow<T>>> {
    let (family, prior) = (model.family(), model.prior());
    let nb = kl_neighborhood_mass(family, prior, p0, model.pstar(), eps_n)?;
    if !(nb > T::zero()) {
        return Err(Error::EmptyNeighborhood);
    }
    let shells = build_shells(family, model.pstar_index(), p0, eps_n, T::one(), j_max)?;
    let ne2 = T::from_usize(n).unwrap() * eps_n * eps_n;
    Ok(shells
        .into_iter()
        .map(|s| {
            let shell_mass = prior.mass(&s.member_indices);
            let log_ratio = shell_mass.ln() - nb.ln();
            let jj = T::from_usize(s.j * s.j).unwrap();
            let log_bound = ne2 * jj / T::lit(8.0);
            PriorRatioRow {
                j: s.j,
                shell_mass,
                neighborhood_mass: nb,
                log_ratio,
                log_bound,
                holds: log_ratio <= log_bound + T::tol(BOUNDARY_TOL),
            }
        })
        .collect())
}

/// Inputs for [`check_theorem1_conditions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateConditionParams<T> {
    pub eps_n: T,
    pub n: usize,
    /// Radius multiplier `M`: the target is `{d ≥ M ε_n}`.
    pub m: T,
    pub alpha: T,
    /// Entropy constant: condition (i) is `Σ_j Π(A_j)^α ≤ e^{nε²K}`.
    pub k: T,
    /// Prior-mass constant: condition (ii) is `Π(B) ≥ e^{-L nε²}`.
    pub l: T,
    /// Evidence-event constant `C`.
    pub c: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateConditionReport<T> {
    pub params: RateConditionParams<T>,
    pub target_size: usize,
    pub cover: CoveringReport<T>,
    /// `Σ_j Π(A_j)^α` over the greedy cover.
    pub prior_power_sum: T,
    /// `nε²K − log Σ_j Π(A_j)^α`.
    pub entropy_slack: T,
    pub entropy_holds: bool,
    pub neighborhood_mass: T,
    /// `log Π(B) + L nε²`.
    pub prior_mass_slack: T,
    pub prior_mass_holds: bool,
    /// `−nM²ε²/4 + αnε²(1+C) + αnε²L + log Σ_j Π(A_j)^α`: log of the bound on
    /// `E₀ Π^n(A_n)` restricted to the evidence event.
    pub log_posterior_bound: T,
    /// How the entropy condition is read.
    pub note: String,
}

pub const ENTROPY_CONDITION_NOTE: &str = "entropy condition evaluated as sum_j Prior(A_j)^alpha <= \
     exp(n eps^2 K) over a greedy alpha-cover of {d >= M eps} at threshold M^2 eps^2 / 4; the \
     contraction bound is exp(log_posterior_bound) on the evidence event";

/// Evaluates the entropy and prior-mass conditions at one `(n, ε_n)`.
pub fn check_theorem1_conditions<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    params: RateConditionParams<T>,
) -> Result<RateConditionReport<T>> {
    let RateConditionParams { eps_n, n, m, alpha, k, l, c } = params;
    if !(eps_n > T::zero() && m > T::zero()) {
        return Err(Error::Domain("eps_n and M must be positive".into()));
    }
    let (family, prior, pstar) = (model.family(), model.prior(), model.pstar());
    let radius = m * eps_n;
    let threshold = radius * radius / T::lit(4.0);
    let target = build_target_set(family, model.pstar_index(), p0, radius)?;
    let cover = build_cover(&target, family, p0, pstar, alpha, threshold)?;

    let prior_power_sum: T = cover
        .elements
        .iter()
        .map(|e| prior.mass(e.generator_indices()).powf(alpha))
        .sum();
    let ne2 = T::from_usize(n).unwrap() * eps_n * eps_n;
    let entropy_slack = ne2 * k - prior_power_sum.ln();
    let nb = kl_neighborhood_mass(family, prior, p0, pstar, eps_n)?;
    let prior_mass_slack = nb.ln() + l * ne2;
    let quarter = T::lit(0.25);
    let log_posterior_bound =
        -ne2 * m * m * quarter + alpha * ne2 * (T::one() + c) + alpha * ne2 * l + prior_power_sum.ln();
    let tol = T::tol(BOUNDARY_TOL);

    Ok(RateConditionReport {
        params,
        target_size: target.len(),
        cover: cover.report(family),
        prior_power_sum,
        entropy_slack,
        entropy_holds: entropy_slack >= -tol,
        neighborhood_mass: nb,
        prior_mass_slack,
        prior_mass_holds: prior_mass_slack >= -tol,
        log_posterior_bound,
        note: ENTROPY_CONDITION_NOTE.to_string(),
    })
}
