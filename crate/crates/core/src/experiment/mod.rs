//! Configured, replicated contraction experiments.

mod config;
mod fit;
pub mod render;
mod run;
mod schedule;

pub use config::{CheckSettings, ExperimentConfig, Regime};
pub use fit::{fit_rate, FitFlag, RateFit, RatePoint};
pub use run::{
    checkpoints, run_contraction, shell_masses, CheckpointSummary, RateReport, ShellRow, ShellTable,
    UnionBoundSummary, MASS_CONSERVATION_TOL, MIN_REPLICATIONS_FOR_CI, ORACLE_TOL,
};
pub use schedule::{EpsSchedule, RadiusSchedule};
