//! Experiment configuration: a TOML file with a fixed schema.
//!
//! ```toml
//! master_seed = 7
//! horizon = 2000
//! replications = 200
//! alpha = 0.5
//! j_max = 4
//! truth = [0.5, 0.5]
//! # prior = [...]            # optional, uniform when absent
//!
//! [eps_schedule]
//! kind = "constant"          # constant | inv-sqrt | inv-sqrt-log
//! c = 0.05
//!
//! [radius]
//! kind = "constant"          # constant | log
//! c = 1.0
//!
//! [[member]]
//! label = "0.05"
//! probs = [0.95, 0.05]
//! ```
//!
//! Parsing goes through a loosely typed mirror so that out-of-range values
//! come back as field-named errors instead of generic type errors.

use serde::{Deserialize, Serialize};

use super::schedule::{EpsSchedule, RadiusSchedule};
use crate::error::{Error, Result};
use crate::model_space::file::{family_from_records, family_to_records, MemberRecord};
use crate::model_space::{FiniteDensity, ModelFamily, Prior};

/// Which limiting regime the ε schedule is meant to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `nε_n² → ∞`.
    Diverging,
    /// `nε_n²` bounded away from zero.
    Bounded,
}

/// Parameters for the individual verification commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSettings {
    /// Steps for the key-identity check.
    pub identity_steps: usize,
    /// Exhaustive covering-number search runs when the target has at most this many members.
    pub cover_exact_max: usize,
    pub decay_exact_n: usize,
    pub decay_mc_n: usize,
    pub decay_mc_replications: usize,
    /// Evidence-event constant `C`.
    pub evidence_c: f64,
    /// Entropy-condition constant `K`.
    pub theorem_k: f64,
    /// Prior-mass constant `L`.
    pub theorem_l: f64,
    /// Attach a certified cover to each checkpoint in `simulate` and count union-bound violations.
    pub attach_cover: bool,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            identity_steps: 50,
            cover_exact_max: 10,
            decay_exact_n: 8,
            decay_mc_n: 100,
            decay_mc_replications: 100_000,
            evidence_c: 1.0,
            theorem_k: 1.0,
            theorem_l: 1.0,
            attach_cover: false,
        }
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub truth: FiniteDensity<f64>,
    pub family: ModelFamily<f64>,
    pub prior: Prior<f64>,
    pub alpha: f64,
    pub eps_schedule: EpsSchedule,
    pub radius: RadiusSchedule,
    pub horizon: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub j_max: usize,
    /// Final mean mass at or below which a run counts as contracting.
    pub pass_level: f64,
    /// Replications re-evaluated by the direct product-form posterior.
    pub oracle_replications: usize,
    pub regime: Option<Regime>,
    pub checks: CheckSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: u64,
    horizon: i64,
    replications: i64,
    alpha: f64,
    #[serde(default = "default_j_max")]
    j_max: i64,
    #[serde(default = "default_pass_level")]
    pass_level: f64,
    #[serde(default = "default_oracle_replications")]
    oracle_replications: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regime: Option<Regime>,
    truth: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<Vec<f64>>,
    eps_schedule: EpsSchedule,
    radius: RadiusSchedule,
    #[serde(default)]
    checks: CheckSettings,
    member: Vec<MemberRecord>,
}

fn default_j_max() -> i64 {
    4
}
fn default_pass_level() -> f64 {
    0.01
}
fn default_oracle_replications() -> i64 {
    10
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

fn positive_count(field: &str, v: i64) -> Result<usize> {
    if v < 1 {
        return Err(field_err(field, format!("must be a positive integer, got {v}")));
    }
    Ok(v as usize)
}

impl ExperimentConfig {
    /// Parses and validates TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let loc = e
                .span()
                .map(|s| {
                    let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                    format!(" (line {line})")
                })
                .unwrap_or_default();
            field_err("<document>", format!("{msg}{loc}"))
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let horizon = positive_count("horizon", raw.horizon)?;
        let replications = positive_count("replications", raw.replications)?;
        let j_max = positive_count("j_max", raw.j_max)?;
        if raw.oracle_replications < 0 {
            return Err(field_err("oracle_replications", "must be nonnegative"));
        }
        if !(raw.alpha > 0.0 && raw.alpha < 1.0) {
            return Err(field_err("alpha", format!("must lie in (0, 1), got {}", raw.alpha)));
        }
        if !(raw.pass_level > 0.0 && raw.pass_level <= 1.0) {
            return Err(field_err("pass_level", "must lie in (0, 1]"));
        }
        raw.eps_schedule.validate()?;
        raw.radius.validate()?;
        let truth = FiniteDensity::new(raw.truth).map_err(|e| field_err("truth", e.to_string()))?;
        let family = family_from_records(&raw.member)?;
        if family.alphabet_size() != truth.alphabet_size() {
            return Err(field_err(
                "truth",
                format!(
                    "alphabet size {} differs from the family's {}",
                    truth.alphabet_size(),
                    family.alphabet_size()
                ),
            ));
        }
        let prior = match raw.prior {
            Some(w) => Prior::new(w).map_err(|e| field_err("prior", e.to_string()))?,
            None => Prior::uniform(family.len())?,
        };
        prior
            .check_aligned(&family)
            .map_err(|e| field_err("prior", e.to_string()))?;
        if raw.regime == Some(Regime::Diverging) && !raw.eps_schedule.diverging_n_eps_sq() {
            return Err(field_err(
                "eps_schedule",
                "regime `diverging` needs n eps_n^2 -> infinity; inv-sqrt keeps it constant",
            ));
        }
        let c = &raw.checks;
        if c.decay_mc_replications == 0 || c.identity_steps == 0 {
            return Err(field_err("checks", "step and replication counts must be positive"));
        }
        Ok(Self {
            truth,
            family,
            prior,
            alpha: raw.alpha,
            eps_schedule: raw.eps_schedule,
            radius: raw.radius,
            horizon,
            replications,
            master_seed: raw.master_seed,
            j_max,
            pass_level: raw.pass_level,
            oracle_replications: raw.oracle_replications as usize,
            regime: raw.regime,
            checks: raw.checks,
        })
    }

    fn to_raw(&self) -> RawConfig {
        RawConfig {
            master_seed: self.master_seed,
            horizon: self.horizon as i64,
            replications: self.replications as i64,
            alpha: self.alpha,
            j_max: self.j_max as i64,
            pass_level: self.pass_level,
            oracle_replications: self.oracle_replications as i64,
            regime: self.regime,
            truth: self.truth.probs().to_vec(),
            prior: Some(self.prior.weights().to_vec()),
            eps_schedule: self.eps_schedule,
            radius: self.radius,
            checks: self.checks.clone(),
            member: family_to_records(&self.family),
        }
    }

    /// Canonical TOML: every default spelled out, fixed key order.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field_err("<file>", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = r#"
master_seed = 7
horizon = 64
replications = 20
alpha = 0.5
truth = [0.5, 0.5]

[eps_schedule]
kind = "constant"
c = 0.05

[radius]
kind = "constant"
c = 1.0

[[member]]
label = "0.30"
probs = [0.7, 0.3]

[[member]]
label = "0.45"
probs = [0.55, 0.45]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(GRID).unwrap();
        assert_eq!(c.family.len(), 2);
        assert_eq!(c.prior.weights(), &[0.5, 0.5]);
        assert_eq!(c.j_max, 4);
        assert_eq!(c.checks, CheckSettings::default());
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = ExperimentConfig::from_toml(GRID).unwrap();
        let text = c.to_canonical_toml();
        let again = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_canonical_toml(), text);
    }

    #[test]
    fn bad_member_is_named() {
        let text = GRID.replace("probs = [0.55, 0.45]", "probs = [0.55, 0.43]");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::InvalidDensity { record: Some(1), label: Some(l), .. }) => assert_eq!(l, "0.45"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_replications_is_rejected() {
        let text = GRID.replace("replications = 20", "replications = -3");
        match ExperimentConfig::from_toml(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "replications"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schedule_must_fit_regime() {
        let text = GRID
            .replace("kind = \"constant\"\nc = 0.05", "kind = \"inv-sqrt\"\nc = 0.05")
            .replace("alpha = 0.5", "alpha = 0.5\nregime = \"diverging\"");
        assert!(matches!(
            ExperimentConfig::from_toml(&text),
            Err(Error::Config { field, .. }) if field == "eps_schedule"
        ));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let text = GRID.replace("horizon = 64", "horizon = = 64");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_schedule_kind_is_rejected() {
        let text = GRID.replace("kind = \"constant\"\nc = 0.05", "kind = \"n^-1/3\"\nc = 0.05");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
