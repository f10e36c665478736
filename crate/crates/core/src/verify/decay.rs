//! Supermartingale decay of a certified cover element.
//!
//! If the hull of `A` has `E₀(p/p*)^α ≤ e^{-t}` everywhere, the predictive
//! `p_{kA}` lies in that hull, and the conditional identity gives
//! `E₀(L_{k+1})^α ≤ e^{-t} E₀(L_k)^α` for `L_k = ∫_A R_k dΠ`. Iterating,
//! `E₀(L_n)^α ≤ e^{-nt} Π(A)^α`.

use serde::Serialize;

use super::enumerate::{exact_power_expectation, mc_paths, summarize};
use crate::covering::{certify_element, CoverElement};
use crate::error::{Error, Result};
use crate::model_space::FiniteDensity;
use crate::posterior::PosteriorModel;
use crate::sampling::Z99;
use crate::scalar::Scalar;

/// Relative rounding allowance on top of the certificate's gap slack.
const ROUNDING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DecayMode {
    /// Exhaustive enumeration of all sequences.
    Exact,
    /// Independent seeded paths; bands at 99%.
    MonteCarlo { replications: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport<T> {
    pub n_max: usize,
    pub alpha: T,
    /// Certified per-step rate `t`.
    pub certified_rate: T,
    pub prior_mass: T,
    pub mode: DecayMode,
    /// `E₀(L_n)^α` for `n = 0..=n_max`, exact or estimated.
    pub lhs_curve: Vec<T>,
    /// `e^{-nt} Π(A)^α`.
    pub rhs_curve: Vec<T>,
    /// Allowed excess over `rhs_curve`: certificate gap and rounding in
    /// exact mode, plus the 99% half-width in Monte Carlo mode.
    pub tolerance: Vec<T>,
    /// Monte Carlo 99% half-widths.
    pub half_widths: Option<Vec<T>>,
    /// `n` where the bound failed beyond tolerance.
    pub violations: Vec<usize>,
    /// One-step checks performed and how many failed.
    pub one_step_checks: usize,
    pub one_step_violations: usize,
}

impl<T: Scalar> DecayReport<T> {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.one_step_violations == 0
    }
}

/// Checks `E₀(L_n)^α ≤ e^{-nt} Π(A)^α` for `n ≤ n_max` and the one-step contraction.
///
/// The element is re-certified against `p0` and the model's `p*` first; a
/// certificate that does not hold here makes the bound meaningless.
///
/// In exact mode the one-step check compares consecutive exact values. In
/// Monte Carlo mode it is exact along each simulated path: the conditional
/// factor `E₀(p_{kA}/p*)^α` is summed over the next symbol and compared to
/// `e^{-t}` plus the certificate gap.
pub fn check_supermartingale_decay<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    element: &CoverElement<T>,
    alpha: T,
    n_max: usize,
    mode: DecayMode,
) -> Result<DecayReport<T>> {
    element.validate()?;
    if element.alpha() != alpha {
        return Err(Error::InvalidCertificate(format!(
            "element certified at alpha {} but decay requested at {alpha}",
            element.alpha()
        )));
    }
    let set = element.generators();
    let t = element.certified_threshold();
    let recheck = certify_element(&set, model.family(), p0, model.pstar(), alpha, t)?;
    let gap = match recheck.certified() {
        Some(e) => e.certificate().optimality_gap,
        None => {
            return Err(Error::InvalidCertificate(
                "element does not certify against this truth and reference".into(),
            ))
        }
    };

    let prior_mass = model.prior().mass(&set);
    let step_bound = (-t).exp();
    let step_slack = (step_bound + gap) / step_bound;
    let rounding = T::one() + T::tol(ROUNDING_TOL);
    let rhs_curve: Vec<T> = (0..=n_max)
        .map(|n| (-(T::from_usize(n).unwrap()) * t).exp() * prior_mass.powf(alpha))
        .collect();
    let exact_tol: Vec<T> = rhs_curve
        .iter()
        .enumerate()
        .map(|(n, &r)| r * (step_slack.powi(n as i32) * rounding - T::one()))
        .collect();

    let mut report = DecayReport {
        n_max,
        alpha,
        certified_rate: t,
        prior_mass,
        mode,
        lhs_curve: Vec::new(),
        rhs_curve,
        tolerance: Vec::new(),
        half_widths: None,
        violations: Vec::new(),
        one_step_checks: 0,
        one_step_violations: 0,
    };

    match mode {
        DecayMode::Exact => {
            report.lhs_curve = (0..=n_max)
                .map(|n| exact_power_expectation(model, p0, &set, alpha, n))
                .collect::<Result<_>>()?;
            report.tolerance = exact_tol;
            for k in 0..n_max {
                report.one_step_checks += 1;
                let (a, b) = (report.lhs_curve[k], report.lhs_curve[k + 1]);
                if b > a * step_bound * step_slack * rounding {
                    report.one_step_violations += 1;
                }
            }
        }
        DecayMode::MonteCarlo { replications, seed } => {
            let pstar = model.pstar();
            let factor_cap = (step_bound + gap) * rounding;
            let (sum, sum_sq, flagged) = mc_paths(model, p0, &set, alpha, n_max, replications, seed, |state, log_l| {
                let pred = match model.predictive_parts(state, &set, log_l) {
                    Ok((probs, _)) => probs,
                    // L_k = 0 on this path: both sides of the one-step bound vanish
                    Err(Error::NullConditioning) => return Ok(false),
                    Err(e) => return Err(e),
                };
                let factor: T = p0
                    .support()
                    .map(|x| p0.prob(x) * (pred[x] / pstar.prob(x)).powf(alpha))
                    .sum();
                Ok(factor > factor_cap)
            })?;
            let est = summarize(sum, sum_sq, replications);
            let hw: Vec<T> = est.std_errors.iter().map(|&s| s * T::lit(Z99)).collect();
            report.tolerance = exact_tol.iter().zip(&hw).map(|(&e, &h)| e + h).collect();
            report.half_widths = Some(hw);
            report.lhs_curve = est.means;
            report.one_step_checks = replications * n_max;
            report.one_step_violations = flagged;
        }
    }

    report.violations = (0..=n_max)
        .filter(|&n| report.lhs_curve[n] > report.rhs_curve[n] + report.tolerance[n])
        .collect();
    Ok(report)
}
