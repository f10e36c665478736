use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate sequence `ε_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EpsSchedule {
    /// `ε_n = c`.
    Constant { c: f64 },
    /// `ε_n = c/√n`.
    InvSqrt { c: f64 },
    /// `ε_n = c·√(log n / n)`; zero at `n = 1`.
    InvSqrtLog { c: f64 },
}

impl EpsSchedule {
    pub fn eval(&self, n: usize) -> f64 {
        let nf = n.max(1) as f64;
        match *self {
            EpsSchedule::Constant { c } => c,
            EpsSchedule::InvSqrt { c } => c / nf.sqrt(),
            EpsSchedule::InvSqrtLog { c } => c * (nf.ln() / nf).sqrt(),
        }
    }

    /// `n ε_n²`.
    pub fn n_eps_sq(&self, n: usize) -> f64 {
        let e = self.eval(n);
        n as f64 * e * e
    }

    /// Whether `nε_n² → ∞`.
    pub fn diverging_n_eps_sq(&self) -> bool {
        !matches!(self, EpsSchedule::InvSqrt { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let c = match *self {
            EpsSchedule::Constant { c } | EpsSchedule::InvSqrt { c } | EpsSchedule::InvSqrtLog { c } => c,
        };
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config {
                field: "eps_schedule.c".into(),
                message: format!("must be positive and finite, got {c}"),
            });
        }
        Ok(())
    }
}

/// Radius multiplier `M_n`; the target set is `d(P, P*) ≥ M_n ε_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadiusSchedule {
    /// `M_n = c`.
    Constant { c: f64 },
    /// `M_n = c·log n`; zero at `n = 1`.
    Log { c: f64 },
}

impl RadiusSchedule {
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            RadiusSchedule::Constant { c } => c,
            RadiusSchedule::Log { c } => c * (n.max(1) as f64).ln(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = match *self {
            RadiusSchedule::Constant { c } | RadiusSchedule::Log { c } => c,
        };
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config {
                field: "radius.c".into(),
                message: format!("must be positive and finite, got {c}"),
            });
        }
        Ok(())
    }
}
