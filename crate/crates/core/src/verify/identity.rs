//! The restricted-integral recursion and its conditional-expectation form.
//!
//! For any set `A` and step `k`:
//!
//! ```text
//! ∫_A R_{k+1} dΠ = (p_{kA}(x)/p*(x)) · ∫_A R_k dΠ              (pathwise)
//! E₀[(∫_A R_{k+1} dΠ)^α | X_1..X_k] = (∫_A R_k dΠ)^α E₀(p_{kA}/p*)^α   (conditional)
//! ```
//!
//! The pathwise form is checked along a seeded draw from `p0`; the
//! conditional form by summing over every possible next symbol.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_space::{FiniteDensity, IndexSet};
use crate::posterior::{PosteriorModel, PosteriorState};
use crate::sampling::{replication_rng, SymbolSampler};
use crate::scalar::{log_sum_exp, Scalar};

/// Relative tolerance the identity must meet.
pub const KEY_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityForm {
    Pathwise,
    Conditional,
}

/// Where the largest discrepancy occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityInstance {
    pub step: u64,
    pub form: IdentityForm,
    /// Observed symbol for the pathwise form.
    pub symbol: Option<usize>,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub max_relative_error: f64,
    pub instances_checked: usize,
    pub worst_case: Option<IdentityInstance>,
    pub alpha: f64,
    pub steps: usize,
    pub seed: u64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.instances_checked > 0 && self.max_relative_error <= KEY_IDENTITY_TOL
    }

    /// Text rendering; refuses when nothing was checked.
    pub fn render(&self) -> Result<String> {
        if self.instances_checked == 0 {
            return Err(Error::Domain("identity report has no checked instances".into()));
        }
        Ok(self.to_string())
    }

    fn record(&mut self, inst: IdentityInstance) {
        self.instances_checked += 1;
        if inst.relative_error > self.max_relative_error || self.worst_case.is_none() {
            self.max_relative_error = self.max_relative_error.max(inst.relative_error);
            self.worst_case = Some(inst);
        }
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances_checked\t{}", self.instances_checked)?;
        writeln!(f, "max_relative_error\t{:e}", self.max_relative_error)?;
        writeln!(f, "tolerance\t{KEY_IDENTITY_TOL:e}")?;
        if let Some(w) = &self.worst_case {
            writeln!(f, "worst_step\t{}\nworst_form\t{:?}", w.step, w.form)?;
        }
        write!(f, "status\t{}", if self.passed() { "pass" } else { "fail" })
    }
}

/// Relative error between two log-domain values: `|exp(a − b) − 1|`.
fn log_rel_err<T: Scalar>(a: T, b: T) -> f64 {
    if a == T::neg_infinity() && b == T::neg_infinity() {
        return 0.0;
    }
    (a - b).to_f64_lossy().exp_m1().abs()
}

/// Checks both forms of the identity for `steps` steps along a path drawn from `p0`.
pub fn check_key_identity<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    set: &IndexSet,
    alpha: T,
    steps: usize,
    seed: u64,
) -> Result<IdentityReport> {
    if !(alpha > T::zero() && alpha <= T::one()) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if model.prior().mass(set) <= T::zero() {
        return Err(Error::NullConditioning);
    }
    let sampler = SymbolSampler::new(p0)?;
    let mut rng = replication_rng(seed, 0);
    let pstar = model.pstar();
    let mut report = IdentityReport {
        max_relative_error: 0.0,
        instances_checked: 0,
        worst_case: None,
        alpha: alpha.to_f64_lossy(),
        steps,
        seed,
    };

    let mut state = model.init();
    for _ in 0..steps {
        let log_k = model.restricted_log_integral(&state, set)?.log_value;
        if log_k == T::neg_infinity() {
            break;
        }
        let pred = model.predictive_density(&state, set)?;

        let rel = conditional_form_error(model, p0, pstar, set, &state, &pred.density, log_k, alpha)?;
        report.record(IdentityInstance {
            step: state.n(),
            form: IdentityForm::Conditional,
            symbol: None,
            relative_error: rel,
        });

        let x = sampler.draw(&mut rng);
        let next = model.update(&state, x)?;
        let lhs = model.restricted_log_integral(&next, set)?.log_value;
        let rhs = pred.density.prob(x).ln() - pstar.prob(x).ln() + log_k;
        report.record(IdentityInstance {
            step: state.n(),
            form: IdentityForm::Pathwise,
            symbol: Some(x),
            relative_error: log_rel_err(lhs, rhs),
        });
        state = next;
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn conditional_form_error<T: Scalar>(
    model: &PosteriorModel<'_, T>,
    p0: &FiniteDensity<T>,
    pstar: &FiniteDensity<T>,
    set: &IndexSet,
    state: &PosteriorState<T>,
    pred: &FiniteDensity<T>,
    log_k: T,
    alpha: T,
) -> Result<f64> {
    let mut lhs_terms = Vec::new();
    let mut affinity = T::zero();
    for x in p0.support() {
        let next = model.update(state, x)?;
        let l_next = model.restricted_log_integral(&next, set)?.log_value;
        lhs_terms.push(p0.prob(x).ln() + alpha * l_next);
        affinity = affinity + p0.prob(x) * (pred.prob(x) / pstar.prob(x)).powf(alpha);
    }
    let lhs = log_sum_exp(lhs_terms);
    let rhs = alpha * log_k + affinity.ln();
    Ok(log_rel_err(lhs, rhs))
}
