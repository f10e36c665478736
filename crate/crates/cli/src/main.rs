//! `misrate`: command-line front end for the contraction laboratory.
//!
//! Exit status: 0 when the checked property holds, 1 when it fails, 2 for
//! usage, configuration or precondition errors.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use misrate_core::experiment::ExperimentConfig;
use misrate_core::Error;

use commands::Outcome;
use manifest::{now_unix, write_atomic, ManifestFile, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            // the target genuinely cannot be covered at this threshold
            CliError::Core(Error::Uncoverable { .. }) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "misrate", version, about = "Posterior contraction under misspecification on finite alphabets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "misrate-out")]
    out: PathBuf,
    /// Replication count; overrides the config.
    #[arg(long, value_name = "N")]
    replications: Option<usize>,
    /// Horizon, or step count for verify-identity and verify-decay.
    #[arg(long, value_name = "N")]
    n: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// KL projection of the truth onto the family.
    Project(Common),
    /// Greedy and, for small targets, exact α-covering of the target set at the horizon.
    Cover(Common),
    /// Replicated contraction run.
    Simulate(Common),
    /// Check the restricted-integral identity along a seeded path.
    VerifyIdentity(Common),
    /// Check supermartingale decay for each element of the cover.
    VerifyDecay {
        #[command(flatten)]
        common: Common,
        /// Exhaustive enumeration (default).
        #[arg(long, conflicts_with = "monte_carlo")]
        exact: bool,
        /// Seeded Monte Carlo with 99% bands.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// Entropy, prior-mass, prior-ratio and evidence conditions at the horizon.
    Conditions(Common),
    /// Posterior mass of each distance shell.
    Shells(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Project(_) => "project",
            Command::Cover(_) => "cover",
            Command::Simulate(_) => "simulate",
            Command::VerifyIdentity(_) => "verify-identity",
            Command::VerifyDecay { .. } => "verify-decay",
            Command::Conditions(_) => "conditions",
            Command::Shells(_) => "shells",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Project(c)
            | Command::Cover(c)
            | Command::Simulate(c)
            | Command::VerifyIdentity(c)
            | Command::Conditions(c)
            | Command::Shells(c) => c,
            Command::VerifyDecay { common, .. } => common,
        }
    }
}

/// Folds command-line overrides into the config so the manifest's config is
/// the one actually run.
fn effective_config(cmd: &Command) -> Result<ExperimentConfig, Error> {
    let common = cmd.common();
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    let positive = |field: &str, v: usize| {
        if v == 0 {
            Err(Error::Config { field: field.into(), message: "must be positive".into() })
        } else {
            Ok(v)
        }
    };
    match cmd {
        Command::VerifyDecay { monte_carlo, .. } => {
            if let Some(r) = common.replications {
                cfg.checks.decay_mc_replications = positive("--replications", r)?;
            }
            if let Some(n) = common.n {
                if *monte_carlo {
                    cfg.checks.decay_mc_n = n;
                } else {
                    cfg.checks.decay_exact_n = n;
                }
            }
        }
        Command::VerifyIdentity(_) => {
            if let Some(n) = common.n {
                cfg.checks.identity_steps = positive("--n", n)?;
            }
        }
        _ => {
            if let Some(r) = common.replications {
                cfg.replications = positive("--replications", r)?;
            }
            if let Some(n) = common.n {
                cfg.horizon = positive("--n", n)?;
            }
        }
    }
    Ok(cfg)
}

fn emit(cmd: &Command, cfg: &ExperimentConfig, outcome: Outcome) -> Result<(), CliError> {
    let canonical = cfg.to_canonical_toml();
    let mut m = RunManifest::new(&canonical, cfg.master_seed, cmd.name());
    if let Command::VerifyDecay { monte_carlo, .. } = cmd {
        let mode = if *monte_carlo { "monte-carlo" } else { "exact" };
        m.options.push(("mode".into(), mode.into()));
    }
    m.outputs = outcome.files.iter().map(|(name, _)| name.clone()).collect();
    m.outputs.push("summary.json".into());
    m.outputs.push("manifest.json".into());

    let out = &cmd.common().out;
    let header = m.header_line();
    for (name, body) in &outcome.files {
        write_atomic(&out.join(name), format!("{header}{body}").as_bytes())?;
    }
    let summary = serde_json::json!({
        "manifest": &m,
        "passed": outcome.passed,
        "report": outcome.summary,
    });
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    write_atomic(&out.join("summary.json"), text.as_bytes())?;
    let file = ManifestFile { manifest: &m, timestamp_unix: now_unix(), config: &canonical };
    let text = serde_json::to_string_pretty(&file).expect("manifest serializes") + "\n";
    write_atomic(&out.join("manifest.json"), text.as_bytes())?;
    Ok(())
}

fn run(cmd: &Command) -> Result<bool, CliError> {
    let cfg = effective_config(cmd)?;
    let outcome = match cmd {
        Command::Project(_) => commands::project(&cfg),
        Command::Cover(_) => commands::cover(&cfg),
        Command::Simulate(_) => commands::simulate(&cfg),
        Command::VerifyIdentity(_) => commands::verify_identity(&cfg),
        Command::VerifyDecay { monte_carlo, .. } => commands::verify_decay(&cfg, *monte_carlo),
        Command::Conditions(_) => commands::conditions(&cfg),
        Command::Shells(_) => commands::shells(&cfg),
    }?;
    print!("{}", outcome.stdout);
    let passed = outcome.passed;
    emit(cmd, &cfg, outcome)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
