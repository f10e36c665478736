//! Least-squares fit of `log Π^n(A_n)` against `nε_n²`.

use serde::Serialize;

use super::schedule::EpsSchedule;
use crate::error::{Error, Result};

/// Slopes at or above this count as no contraction.
const FLAT_SLOPE_TOL: f64 = 1e-12;

/// Mean posterior mass of the target set at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub mass: f64,
    /// Confidence half-width, when enough replications exist to compute one.
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "flag", rename_all = "kebab-case")]
pub enum FitFlag {
    /// Slope is not negative.
    NoContraction,
    /// Mass rose between consecutive checkpoints by more than the bands allow.
    NonMonotone { from_n: usize, to_n: usize },
    /// Points with zero mass were dropped from the fit.
    DroppedZeroMass { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
    pub flags: Vec<FitFlag>,
}

impl RateFit {
    pub fn contracts(&self) -> bool {
        !self.flags.contains(&FitFlag::NoContraction)
    }
}

/// Fits `log mass = intercept + slope · nε_n²` over points with positive mass.
pub fn fit_rate(points: &[RatePoint], schedule: &EpsSchedule) -> Result<RateFit> {
    let mut flags = Vec::new();
    for w in points.windows(2) {
        let band = w[0].half_width.unwrap_or(0.0) + w[1].half_width.unwrap_or(0.0);
        if w[1].mass - w[0].mass > band {
            flags.push(FitFlag::NonMonotone { from_n: w[0].n, to_n: w[1].n });
        }
    }
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.mass > 0.0)
        .map(|p| (schedule.n_eps_sq(p.n), p.mass.ln()))
        .collect();
    let dropped = points.len() - used.len();
    if used.len() < 3 {
        return Err(Error::FitUndefined(format!(
            "{} checkpoints with positive mass; at least 3 are needed",
            used.len()
        )));
    }
    if dropped > 0 {
        flags.push(FitFlag::DroppedZeroMass { count: dropped });
    }
    let k = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / k;
    let my = used.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 1e-12 * (1.0 + mx * mx)) {
        return Err(Error::FitUndefined(
            "n eps_n^2 does not vary across checkpoints".into(),
        ));
    }
    let slope = sxy / sxx;
    if slope > -FLAT_SLOPE_TOL {
        flags.insert(0, FitFlag::NoContraction);
    }
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
        points_used: used.len(),
        flags,
    })
}
