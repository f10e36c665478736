use std::fmt::Write;

use serde_json::{json, Value};

use misrate_core::covering::{build_cover, build_target_set, covering_number_exact, EXACT_MAX_TARGETS};
use misrate_core::experiment::{checkpoints, render, run_contraction, shell_masses, ExperimentConfig};
use misrate_core::model_space::{kl_divergence, kl_projection};
use misrate_core::verify::{
    check_evidence_event, check_key_identity, check_prior_ratio_condition, check_supermartingale_decay,
    check_theorem1_conditions, DecayMode, RateConditionParams,
};
use misrate_core::{Error, IndexSet, Model};

/// Result of one subcommand, before the manifest is attached.
pub struct Outcome {
    pub passed: bool,
    pub stdout: String,
    /// Text reports as `(relative path, contents)`.
    pub files: Vec<(String, String)>,
    pub summary: Value,
}

fn to_value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("report serializes")
}

fn unique_model(cfg: &ExperimentConfig) -> Result<Model<'_>, Error> {
    let proj = kl_projection(&cfg.truth, &cfg.family)?.require_unique()?;
    Model::new(&cfg.family, &cfg.prior, proj.index)
}

/// Target set `{d ≥ M_N ε_N}` at the horizon.
fn horizon_target(cfg: &ExperimentConfig, pstar_index: usize) -> Result<(f64, IndexSet), Error> {
    let n = cfg.horizon;
    let radius = cfg.eps_schedule.eval(n) * cfg.radius.eval(n);
    Ok((radius, build_target_set(&cfg.family, pstar_index, &cfg.truth, radius)?))
}

pub fn project(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let proj = kl_projection(&cfg.truth, &cfg.family)?;
    let mut table = String::from("index\tlabel\tkl\tminimizer\n");
    for (i, p) in cfg.family.members().iter().enumerate() {
        let kl = kl_divergence(&cfg.truth, p)?;
        let _ = writeln!(table, "{i}\t{}\t{kl}\t{}", cfg.family.label(i), proj.tied.contains(&i));
    }
    let mut stdout = format!(
        "projection\t{} ({})\nkl\t{}\nrunner_up_gap\t{}\n",
        proj.index,
        cfg.family.label(proj.index),
        proj.kl_value,
        proj.runner_up_gap
    );
    if !proj.unique {
        let _ = writeln!(stdout, "tie\t{:?} (not broken; a unique minimizer is required)", proj.tied);
    }
    Ok(Outcome {
        passed: proj.unique,
        stdout,
        files: vec![("projection.tsv".into(), table)],
        summary: to_value(&proj),
    })
}

pub fn cover(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let model = unique_model(cfg)?;
    let (radius, target) = horizon_target(cfg, model.pstar_index())?;
    let threshold = radius * radius / 4.0;
    let cover = build_cover(&target, &cfg.family, &cfg.truth, model.pstar(), cfg.alpha, threshold)?;
    let exact = if !target.is_empty() && target.len() <= cfg.checks.cover_exact_max.min(EXACT_MAX_TARGETS) {
        Some(covering_number_exact(
            &target,
            &cfg.family,
            &cfg.truth,
            model.pstar(),
            cfg.alpha,
            threshold,
            target.len(),
        )?)
    } else {
        None
    };
    let report = cover.report(&cfg.family);
    let mut table = String::from(
        "element\tgenerator_indices\tgenerators\tcertified_threshold\tachieved_sup\tmin_log_affinity\tgap\titerations\n",
    );
    for (k, e) in report.elements.iter().enumerate() {
        let idx: Vec<String> = e.generator_indices.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            table,
            "{k}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            idx.join(","),
            e.generators.join(","),
            e.certified_threshold,
            e.achieved_sup,
            e.min_log_affinity,
            e.gap,
            e.iterations
        );
    }
    let passed = cover.covers(&target) && exact.is_none_or(|x| x <= cover.n_upper_bound());
    let mut stdout = format!(
        "target_size\t{}\nradius\t{radius}\nthreshold\t{threshold}\ngreedy_elements\t{}\n",
        target.len(),
        cover.n_upper_bound()
    );
    if let Some(x) = exact {
        let _ = writeln!(stdout, "exact_covering_number\t{x}");
    }
    Ok(Outcome {
        passed,
        stdout,
        files: vec![("cover.tsv".into(), table)],
        summary: json!({
            "target": target,
            "radius": radius,
            "cover": report,
            "exact_covering_number": exact,
        }),
    })
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let report = run_contraction(cfg)?;
    let mut files = vec![
        ("checkpoints.tsv".to_string(), render::checkpoint_tsv(&report)),
        ("shells.tsv".to_string(), render::shell_tsv(&report.shells)),
    ];
    if let Some(r) = render::replicate_tsv(&report) {
        files.push(("replicates.tsv".into(), r));
    }
    for (name, body) in render::series(&report) {
        files.push((format!("series/{name}"), body));
    }
    let summary_text = render::summary(&report);
    files.push(("summary.txt".into(), format!("{summary_text}\n")));
    Ok(Outcome {
        passed: report.passed && report.consistent(),
        stdout: format!("{summary_text}\n"),
        files,
        summary: to_value(&report),
    })
}

pub fn shells(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let table = shell_masses(cfg)?;
    let text = render::shell_tsv(&table);
    Ok(Outcome {
        passed: table.sum_violations == 0,
        stdout: text.clone(),
        files: vec![("shells.tsv".into(), text)],
        summary: to_value(&table),
    })
}

pub fn verify_identity(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let model = unique_model(cfg)?;
    let (_, target) = horizon_target(cfg, model.pstar_index())?;
    let set = if target.is_empty() { cfg.family.all_indices() } else { target };
    let report = check_key_identity(&model, &cfg.truth, &set, cfg.alpha, cfg.checks.identity_steps, cfg.master_seed)?;
    let text = format!("set\t{set:?}\n{}\n", report.render()?);
    Ok(Outcome {
        passed: report.passed(),
        stdout: text.clone(),
        files: vec![("identity.txt".into(), text)],
        summary: json!({ "set": set, "report": report }),
    })
}

pub fn verify_decay(cfg: &ExperimentConfig, monte_carlo: bool) -> Result<Outcome, Error> {
    let model = unique_model(cfg)?;
    let (radius, target) = horizon_target(cfg, model.pstar_index())?;
    if target.is_empty() {
        return Err(Error::Domain(format!("no members at distance ≥ {radius} from p*; nothing to cover")));
    }
    let threshold = radius * radius / 4.0;
    let cover = build_cover(&target, &cfg.family, &cfg.truth, model.pstar(), cfg.alpha, threshold)?;
    let (mode, n_max) = if monte_carlo {
        let mode = DecayMode::MonteCarlo {
            replications: cfg.checks.decay_mc_replications,
            seed: cfg.master_seed,
        };
        (mode, cfg.checks.decay_mc_n)
    } else {
        (DecayMode::Exact, cfg.checks.decay_exact_n)
    };
    let mut table = String::from("element\tn\tlhs\trhs\ttolerance\thalf_width\n");
    let mut stdout = String::new();
    let mut reports = Vec::new();
    let mut passed = true;
    for (k, e) in cover.elements.iter().enumerate() {
        let r = check_supermartingale_decay(&model, &cfg.truth, e, cfg.alpha, n_max, mode)?;
        for n in 0..=n_max {
            let hw = r.half_widths.as_ref().map_or_else(|| "NA".to_string(), |h| h[n].to_string());
            let _ = writeln!(table, "{k}\t{n}\t{}\t{}\t{}\t{hw}", r.lhs_curve[n], r.rhs_curve[n], r.tolerance[n]);
        }
        let _ = writeln!(
            stdout,
            "element {k} {:?}\trate {}\tviolations {}\tone_step {}/{}",
            e.generator_indices(),
            r.certified_rate,
            r.violations.len(),
            r.one_step_violations,
            r.one_step_checks
        );
        passed &= r.passed();
        reports.push(r);
    }
    let _ = write!(stdout, "status\t{}\n", if passed { "pass" } else { "fail" });
    Ok(Outcome {
        passed,
        stdout,
        files: vec![("decay.tsv".into(), table)],
        summary: json!({ "cover": cover.report(&cfg.family), "reports": reports }),
    })
}

pub fn conditions(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    let model = unique_model(cfg)?;
    let n = cfg.horizon;
    let eps_n = cfg.eps_schedule.eval(n);
    let params = RateConditionParams {
        eps_n,
        n,
        m: cfg.radius.eval(n),
        alpha: cfg.alpha,
        k: cfg.checks.theorem_k,
        l: cfg.checks.theorem_l,
        c: cfg.checks.evidence_c,
    };
    let rate = check_theorem1_conditions(&model, &cfg.truth, params)?;
    let ratio = check_prior_ratio_condition(&model, &cfg.truth, eps_n, n, cfg.j_max)?;
    let evidence = check_evidence_event(
        &model,
        &cfg.truth,
        eps_n,
        cfg.checks.evidence_c,
        cfg.replications,
        &checkpoints(n),
        cfg.master_seed,
    )?;

    // The event has probability at least 1 − 1/(C² nε²).
    let c2 = cfg.checks.evidence_c * cfg.checks.evidence_c;
    let mut ev_table = String::from("n\tn_eps_sq\tfrequency\thalf_width\tlower_bound\n");
    let mut evidence_ok = true;
    for row in &evidence.rows {
        let bound = 1.0 - 1.0 / (c2 * row.n_eps_sq);
        evidence_ok &= row.frequency + row.half_width >= bound;
        let _ = writeln!(ev_table, "{}\t{}\t{}\t{}\t{bound}", row.n, row.n_eps_sq, row.frequency, row.half_width);
    }
    let mut ratio_table = String::from("J\tshell_mass\tneighborhood_mass\tlog_ratio\tlog_bound\tholds\n");
    for r in &ratio {
        let _ = writeln!(
            ratio_table,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.j, r.shell_mass, r.neighborhood_mass, r.log_ratio, r.log_bound, r.holds
        );
    }
    let ratio_ok = ratio.iter().all(|r| r.holds);
    let stdout = format!(
        "n\t{n}\neps_n\t{eps_n}\ntarget_size\t{}\ncover_elements\t{}\nentropy_slack\t{}\t{}\n\
         prior_mass_slack\t{}\t{}\nlog_posterior_bound\t{}\nprior_ratio\t{}\nevidence_event\t{}\nnote\t{}\n",
        rate.target_size,
        rate.cover.n_upper_bound,
        rate.entropy_slack,
        holds(rate.entropy_holds),
        rate.prior_mass_slack,
        holds(rate.prior_mass_holds),
        rate.log_posterior_bound,
        holds(ratio_ok),
        holds(evidence_ok),
        rate.note
    );
    Ok(Outcome {
        passed: rate.entropy_holds && rate.prior_mass_holds && ratio_ok && evidence_ok,
        stdout: stdout.clone(),
        files: vec![
            ("conditions.txt".into(), stdout),
            ("prior_ratio.tsv".into(), ratio_table),
            ("evidence.tsv".into(), ev_table),
        ],
        summary: json!({ "rate_conditions": rate, "prior_ratio": ratio, "evidence_event": evidence }),
    })
}

fn holds(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}
