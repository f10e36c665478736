//! Columnar text output for contraction runs.
//!
//! Floats are written in shortest round-trip form so identical runs give
//! identical bytes.

use std::fmt::Write;

use super::run::{RateReport, ShellTable};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// One row per checkpoint.
pub fn checkpoint_tsv(report: &RateReport) -> String {
    let mut s = String::from(
        "n\teps_n\tM_n\tradius\tn_eps_sq\ttarget_size\tmean_mass\tstd_dev\thalf_width\tci_low\tci_high\n",
    );
    for c in &report.checkpoints {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.n,
            c.eps_n,
            c.m_n,
            c.radius,
            c.n_eps_sq,
            c.target_size,
            c.mean_mass,
            c.std_dev,
            opt(c.half_width),
            opt(c.ci_low),
            opt(c.ci_high)
        );
    }
    s
}

pub fn shell_tsv(table: &ShellTable) -> String {
    let mut s = String::from("n\tJ\tinner_radius\touter_radius\tmembers\tmean_mass\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.n, r.j, r.inner_radius, r.outer_radius, r.members, r.mean_mass
        );
    }
    s
}

/// Raw per-replication masses, present only for small runs.
pub fn replicate_tsv(report: &RateReport) -> Option<String> {
    let masses = report.replicate_masses.as_ref()?;
    let mut s = String::from("n\treplication\tmass\n");
    for (c, row) in report.checkpoints.iter().zip(masses) {
        for (r, m) in row.iter().enumerate() {
            let _ = writeln!(s, "{}\t{r}\t{m}", c.n);
        }
    }
    Some(s)
}

/// Plot-ready series as `(file name, contents)`: the mean mass curve and one
/// curve per shell index.
pub fn series(report: &RateReport) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut s = String::from("# n mean_mass ci_low ci_high\n");
    for c in &report.checkpoints {
        let _ = writeln!(s, "{} {} {} {}", c.n, c.mean_mass, opt(c.ci_low), opt(c.ci_high));
    }
    out.push(("mass.dat".to_string(), s));

    let mut js: Vec<usize> = report.shells.rows.iter().map(|r| r.j).collect();
    js.sort_unstable();
    js.dedup();
    for j in js {
        let mut s = format!("# shell J={j}: n mean_mass\n");
        for r in report.shells.rows.iter().filter(|r| r.j == j) {
            let _ = writeln!(s, "{} {}", r.n, r.mean_mass);
        }
        out.push((format!("shell_{j}.dat"), s));
    }
    out
}

/// Short human summary.
pub fn summary(report: &RateReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "p*\t{} ({})\tKL {}", report.pstar_index, report.pstar_label, report.pstar_kl);
    let _ = writeln!(s, "replications\t{}\thorizon\t{}", report.replications, report.horizon);
    let _ = writeln!(s, "final_mean_mass\t{}\tpass_level\t{}", report.final_mean(), report.pass_level);
    match (&report.fit, &report.fit_error) {
        (Some(f), _) => {
            let _ = writeln!(s, "fit_slope\t{}\tintercept\t{}\tpoints\t{}", f.slope, f.intercept, f.points_used);
            for flag in &f.flags {
                let _ = writeln!(s, "fit_flag\t{flag:?}");
            }
        }
        (None, Some(e)) => {
            let _ = writeln!(s, "fit\tundefined: {e}");
        }
        (None, None) => {}
    }
    let _ = writeln!(s, "max_conservation_error\t{:e}", report.max_conservation_error);
    if let Some(e) = report.oracle_max_abs_error {
        let _ = writeln!(s, "oracle_max_abs_error\t{e:e}\t({} replications)", report.oracle_replications);
    }
    if let Some(u) = &report.union_bound {
        let _ = writeln!(s, "union_violations\t{}\tpower_violations\t{}", u.union_violations, u.power_violations);
    }
    let _ = write!(s, "status\t{}", if report.passed && report.consistent() { "pass" } else { "fail" });
    s
}
