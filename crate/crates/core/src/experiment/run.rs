//! Replicated contraction runs.
//!
//! Each replication draws `X_1..X_N` from the truth on its own ChaCha
//! stream and tracks the posterior incrementally. At checkpoints
//! `n = 1, 2, 4, …, N` it records `Π^n(A_n)` for `A_n = {d(P, P*) ≥ M_n ε_n}`
//! and the mass of each distance shell.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::fit::{fit_rate, RateFit, RatePoint};
use crate::covering::{build_cover, build_shells, build_target_set, CoveringReport, ShellSpec};
use crate::error::{Error, Result};
use crate::model_space::{kl_projection, IndexSet};
use crate::posterior::{PosteriorModel, PosteriorState};
use crate::sampling::{replication_rng, SymbolSampler, Z99};

/// Confidence intervals are rendered only with at least this many replications.
pub const MIN_REPLICATIONS_FOR_CI: usize = 50;
/// `|Π^n(A) + Π^n(Aᶜ) − 1|` allowed per checkpoint.
pub const MASS_CONSERVATION_TOL: f64 = 1e-12;
/// Agreement required between incremental and direct posterior masses.
pub const ORACLE_TOL: f64 = 1e-10;
/// Slack for the union and shell inequalities.
const INEQUALITY_TOL: f64 = 1e-12;

/// `1, 2, 4, …` up to `horizon`, with `horizon` itself appended.
pub fn checkpoints(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |&n| n.checked_mul(2))
        .take_while(|&n| n <= horizon)
        .collect();
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

#[derive(Debug, Clone)]
struct Plan {
    n: usize,
    eps_n: f64,
    m_n: f64,
    target: IndexSet,
    complement: IndexSet,
    shells: Vec<ShellSpec<f64>>,
    shells_cover_target: bool,
    cover_sets: Option<Vec<IndexSet>>,
}

#[derive(Debug, Clone, Default)]
struct Trace {
    mass: Vec<f64>,
    shell_mass: Vec<Vec<f64>>,
    conservation: f64,
    oracle_err: Option<f64>,
    union_violations: usize,
    power_violations: usize,
    shell_violations: usize,
}

/// One checkpoint of a contraction run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub n: usize,
    pub eps_n: f64,
    pub m_n: f64,
    pub radius: f64,
    pub n_eps_sq: f64,
    pub target_size: usize,
    pub mean_mass: f64,
    pub std_dev: f64,
    /// 99% normal half-width; absent below [`MIN_REPLICATIONS_FOR_CI`].
    pub half_width: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Whether every target member lies in some shell.
    pub shells_cover_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellRow {
    pub n: usize,
    pub j: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub members: usize,
    pub mean_mass: f64,
}

/// Mean posterior mass of each shell at each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellTable {
    pub rows: Vec<ShellRow>,
    /// Replication-checkpoints where a target covered by the shells had more
    /// mass than the shells together.
    pub sum_violations: usize,
}

/// Certified cover attached to a checkpoint, with the per-path inequality counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionBoundSummary {
    pub covers: Vec<Option<CoveringReport<f64>>>,
    /// Checkpoints where no cover could be built, with the reason.
    pub skipped: Vec<(usize, String)>,
    /// `Π^n(A_n) > Σ_j Π^n(A_j)`.
    pub union_violations: usize,
    /// `Π^n(A_j) > Π^n(A_j)^α`.
    pub power_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub pstar_index: usize,
    pub pstar_label: String,
    pub pstar_kl: f64,
    pub runner_up_gap: f64,
    pub alpha: f64,
    pub horizon: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub checkpoints: Vec<CheckpointSummary>,
    /// Per-replication masses `[checkpoint][replication]`, kept when there are
    /// too few replications for intervals.
    pub replicate_masses: Option<Vec<Vec<f64>>>,
    pub shells: ShellTable,
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    pub max_conservation_error: f64,
    pub oracle_replications: usize,
    pub oracle_max_abs_error: Option<f64>,
    pub union_bound: Option<UnionBoundSummary>,
    pub pass_level: f64,
    pub passed: bool,
}

impl RateReport {
    pub fn final_mean(&self) -> f64 {
        self.checkpoints.last().map_or(f64::NAN, |c| c.mean_mass)
    }

    /// Whether the run's internal consistency checks held.
    pub fn consistent(&self) -> bool {
        self.max_conservation_error <= MASS_CONSERVATION_TOL
            && self.oracle_max_abs_error.is_none_or(|e| e <= ORACLE_TOL)
            && self.shells.sum_violations == 0
            && self
                .union_bound
                .as_ref()
                .is_none_or(|u| u.union_violations == 0 && u.power_violations == 0)
    }
}

fn plan(config: &ExperimentConfig, pstar_index: usize) -> Result<(Vec<Plan>, Option<UnionBoundSummary>)> {
    let family = &config.family;
    let all = family.all_indices();
    let mut plans = Vec::new();
    let mut covers = Vec::new();
    let mut skipped = Vec::new();
    for n in checkpoints(config.horizon) {
        let eps_n = config.eps_schedule.eval(n);
        let m_n = config.radius.eval(n);
        let radius = eps_n * m_n;
        let target = build_target_set(family, pstar_index, &config.truth, radius)?;
        let complement: IndexSet = all.difference(&target).copied().collect();
        let shells = if radius > 0.0 {
            build_shells(family, pstar_index, &config.truth, eps_n, m_n, config.j_max)?
        } else {
            Vec::new()
        };
        let in_shells: IndexSet = shells.iter().flat_map(|s| s.member_indices.iter().copied()).collect();
        let shells_cover_target = !shells.is_empty() && target.is_subset(&in_shells);

        let mut cover_sets = None;
        if config.checks.attach_cover {
            let pstar = family.member(pstar_index);
            let threshold = radius * radius / 4.0;
            let outcome = if target.is_empty() {
                Err("empty target".to_string())
            } else if threshold <= 0.0 {
                Err("zero radius".to_string())
            } else {
                build_cover(&target, family, &config.truth, pstar, config.alpha, threshold).map_err(|e| e.to_string())
            };
            match outcome {
                Ok(c) => {
                    cover_sets = Some(c.elements.iter().map(|e| e.generators()).collect());
                    covers.push(Some(c.report(family)));
                }
                Err(reason) => {
                    skipped.push((n, reason));
                    covers.push(None);
                }
            }
        }
        plans.push(Plan {
            n,
            eps_n,
            m_n,
            target,
            complement,
            shells,
            shells_cover_target,
            cover_sets,
        });
    }
    let union = config.checks.attach_cover.then_some(UnionBoundSummary {
        covers,
        skipped,
        union_violations: 0,
        power_violations: 0,
    });
    Ok((plans, union))
}

/// Posterior mass of `set` from symbol counts alone, without the incremental state.
fn direct_mass(config: &ExperimentConfig, counts: &[u64], set: &IndexSet) -> f64 {
    let logpost: Vec<f64> = config
        .family
        .members()
        .iter()
        .zip(config.prior.weights())
        .map(|(p, &w)| {
            let mut acc = w.ln();
            for (x, &c) in counts.iter().enumerate() {
                if c > 0 {
                    acc += c as f64 * p.prob(x).ln();
                }
            }
            acc
        })
        .collect();
    let max = logpost.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = logpost.iter().map(|l| (l - max).exp()).sum();
    let part: f64 = set.iter().map(|&i| (logpost[i] - max).exp()).sum();
    part / total
}

fn sum_weights(weights: &[f64], set: &IndexSet) -> f64 {
    set.iter().map(|&i| weights[i]).sum()
}

fn replicate(
    config: &ExperimentConfig,
    model: &PosteriorModel<'_, f64>,
    sampler: &SymbolSampler,
    plans: &[Plan],
    r: usize,
) -> Result<Trace> {
    let mut rng = replication_rng(config.master_seed, r as u64);
    let mut state: PosteriorState<f64> = model.init();
    let mut counts = vec![0u64; config.truth.alphabet_size()];
    let with_oracle = r < config.oracle_replications;
    let mut trace = Trace {
        oracle_err: with_oracle.then_some(0.0),
        ..Trace::default()
    };
    let mut next = plans.iter().peekable();
    for n in 1..=config.horizon {
        let x = sampler.draw(&mut rng);
        model.update_in_place(&mut state, x)?;
        counts[x] += 1;
        let Some(plan) = next.next_if(|p| p.n == n) else {
            continue;
        };
        let mass = model.posterior_mass(&state, &plan.target)?;
        let rest = model.posterior_mass(&state, &plan.complement)?;
        trace.conservation = trace.conservation.max((mass + rest - 1.0).abs());
        trace.mass.push(mass);

        let weights = model.posterior_weights(&state)?;
        let shell: Vec<f64> = plan.shells.iter().map(|s| sum_weights(&weights, &s.member_indices)).collect();
        if plan.shells_cover_target && shell.iter().sum::<f64>() < mass - INEQUALITY_TOL {
            trace.shell_violations += 1;
        }
        trace.shell_mass.push(shell);

        if let Some(sets) = &plan.cover_sets {
            let mut total = 0.0;
            for s in sets {
                let m = model.posterior_mass(&state, s)?;
                if m > m.powf(config.alpha) + INEQUALITY_TOL {
                    trace.power_violations += 1;
                }
                total += m;
            }
            if mass > total + INEQUALITY_TOL {
                trace.union_violations += 1;
            }
        }
        if let Some(err) = trace.oracle_err.as_mut() {
            *err = err.max((direct_mass(config, &counts, &plan.target) - mass).abs());
        }
    }
    Ok(trace)
}

struct Simulation {
    plans: Vec<Plan>,
    traces: Vec<Trace>,
    union: Option<UnionBoundSummary>,
    pstar_index: usize,
    pstar_kl: f64,
    runner_up_gap: f64,
}

fn simulate(config: &ExperimentConfig) -> Result<Simulation> {
    let proj = kl_projection(&config.truth, &config.family)?.require_unique()?;
    let model = PosteriorModel::new(&config.family, &config.prior, proj.index)?;
    let sampler = SymbolSampler::new(&config.truth)?;
    let (plans, mut union) = plan(config, proj.index)?;
    let traces: Vec<Trace> = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(config, &model, &sampler, &plans, r))
        .collect::<Result<_>>()?;
    if let Some(u) = union.as_mut() {
        u.union_violations = traces.iter().map(|t| t.union_violations).sum();
        u.power_violations = traces.iter().map(|t| t.power_violations).sum();
    }
    Ok(Simulation {
        plans,
        traces,
        union,
        pstar_index: proj.index,
        pstar_kl: proj.kl_value,
        runner_up_gap: proj.runner_up_gap,
    })
}

fn shell_table(sim: &Simulation) -> ShellTable {
    let reps = sim.traces.len() as f64;
    let mut rows = Vec::new();
    for (c, plan) in sim.plans.iter().enumerate() {
        for (k, s) in plan.shells.iter().enumerate() {
            let total: f64 = sim.traces.iter().map(|t| t.shell_mass[c][k]).sum();
            rows.push(ShellRow {
                n: plan.n,
                j: s.j,
                inner_radius: s.inner_radius,
                outer_radius: s.outer_radius,
                members: s.member_indices.len(),
                mean_mass: total / reps,
            });
        }
    }
    ShellTable {
        rows,
        sum_violations: sim.traces.iter().map(|t| t.shell_violations).sum(),
    }
}

/// Runs the configured experiment. A tied KL projection is an error.
pub fn run_contraction(config: &ExperimentConfig) -> Result<RateReport> {
    let sim = simulate(config)?;
    let reps = config.replications;
    let with_ci = reps >= MIN_REPLICATIONS_FOR_CI;

    let mut summaries = Vec::with_capacity(sim.plans.len());
    for (c, plan) in sim.plans.iter().enumerate() {
        let masses: Vec<f64> = sim.traces.iter().map(|t| t.mass[c]).collect();
        let mean = masses.iter().sum::<f64>() / reps as f64;
        let std_dev = if reps > 1 {
            (masses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half_width = with_ci.then(|| Z99 * std_dev / (reps as f64).sqrt());
        summaries.push(CheckpointSummary {
            n: plan.n,
            eps_n: plan.eps_n,
            m_n: plan.m_n,
            radius: plan.eps_n * plan.m_n,
            n_eps_sq: config.eps_schedule.n_eps_sq(plan.n),
            target_size: plan.target.len(),
            mean_mass: mean,
            std_dev,
            half_width,
            ci_low: half_width.map(|h| (mean - h).max(0.0)),
            ci_high: half_width.map(|h| (mean + h).min(1.0)),
            shells_cover_target: plan.shells_cover_target,
        });
    }

    let points: Vec<RatePoint> = summaries
        .iter()
        .map(|s| RatePoint { n: s.n, mass: s.mean_mass, half_width: s.half_width })
        .collect();
    let (fit, fit_error) = match fit_rate(&points, &config.eps_schedule) {
        Ok(f) => (Some(f), None),
        Err(Error::FitUndefined(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };

    let final_mean = summaries.last().map_or(f64::NAN, |s| s.mean_mass);
    let passed = final_mean <= config.pass_level && fit.as_ref().is_none_or(RateFit::contracts);
    let oracle_max_abs_error = sim
        .traces
        .iter()
        .filter_map(|t| t.oracle_err)
        .reduce(f64::max);

    Ok(RateReport {
        pstar_index: sim.pstar_index,
        pstar_label: config.family.label(sim.pstar_index).to_string(),
        pstar_kl: sim.pstar_kl,
        runner_up_gap: sim.runner_up_gap,
        alpha: config.alpha,
        horizon: config.horizon,
        replications: reps,
        master_seed: config.master_seed,
        replicate_masses: (!with_ci)
            .then(|| (0..sim.plans.len()).map(|c| sim.traces.iter().map(|t| t.mass[c]).collect()).collect()),
        checkpoints: summaries,
        shells: shell_table(&sim),
        fit,
        fit_error,
        max_conservation_error: sim.traces.iter().map(|t| t.conservation).fold(0.0, f64::max),
        oracle_replications: config.oracle_replications.min(reps),
        oracle_max_abs_error,
        union_bound: sim.union,
        pass_level: config.pass_level,
        passed,
    })
}

/// Shell masses alone, from the same replicated run.
pub fn shell_masses(config: &ExperimentConfig) -> Result<ShellTable> {
    simulate(config).map(|s| shell_table(&s))
}
