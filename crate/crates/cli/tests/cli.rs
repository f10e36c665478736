use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const GRID_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/bernoulli_grid.toml");

fn misrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_misrate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_config(dir: &Path, extra: &str, members: &[(&str, [f64; 2])]) -> PathBuf {
    let mut text = format!(
        "master_seed = 3\nhorizon = 64\nreplications = 20\nalpha = 0.5\ntruth = [0.5, 0.5]\n{extra}\n\
         [eps_schedule]\nkind = \"constant\"\nc = 0.1\n\n[radius]\nkind = \"constant\"\nc = 1.0\n\n"
    );
    for (label, p) in members {
        text += &format!("[[member]]\nlabel = \"{label}\"\nprobs = [{}, {}]\n\n", p[0], p[1]);
    }
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path
}

fn grid_members() -> Vec<(&'static str, [f64; 2])> {
    vec![("0.1", [0.9, 0.1]), ("0.25", [0.75, 0.25]), ("0.4", [0.6, 0.4])]
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        out.push((rel, fs::read(&entry).unwrap()));
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            files.extend(walk(&p));
        } else {
            files.push(p);
        }
    }
    files
}

#[test]
fn project_with_truth_in_family_has_zero_kl() {
    let tmp = TempDir::new().unwrap();
    let mut members = grid_members();
    members.push(("fair", [0.5, 0.5]));
    let cfg = small_config(tmp.path(), "", &members);
    let out = tmp.path().join("out");
    let o = misrate(&["project", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("projection\t3 (fair)\nkl\t0\n"), "{}", stdout(&o));
    assert!(out.join("projection.tsv").exists());
}

#[test]
fn tied_projection_fails_project_and_blocks_simulate() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), "", &[("lo", [0.6, 0.4]), ("hi", [0.4, 0.6])]);
    let out = tmp.path().join("out");
    let args = |cmd| [cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = misrate(&args("project"));
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("tie"));
    let o = misrate(&args("simulate"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("not unique"), "{}", stderr(&o));
}

#[test]
fn verify_identity_passes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = misrate(&[
        "verify-identity", "--config", GRID_CONFIG, "--n", "50", "--seed", "7", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("instances_checked\t100"));
    assert!(stdout(&o).contains("status\tpass"));
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"master_seed\": 7"));
}

#[test]
fn simulate_writes_reports_with_embedded_manifest_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = misrate(&["simulate", "--config", GRID_CONFIG, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    }
    for name in ["checkpoints.tsv", "shells.tsv", "series/mass.dat", "summary.txt"] {
        let text = fs::read_to_string(a.join(name)).unwrap();
        assert!(text.starts_with("# manifest {"), "{name}");
        assert!(text.contains("\"subcommand\":\"simulate\""));
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["timestamp_unix"].as_u64().unwrap() > 0);
    assert_eq!(manifest["master_seed"], 20240601);

    let strip = |v: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
        v.into_iter().filter(|(n, _)| n != "manifest.json").collect()
    };
    assert_eq!(strip(read_dir_sorted(&a)), strip(read_dir_sorted(&b)));

    // the manifest's config alone reproduces the run
    let cfg_text = manifest["config"].as_str().unwrap();
    let cfg = tmp.path().join("from_manifest.toml");
    fs::write(&cfg, cfg_text).unwrap();
    let c = tmp.path().join("c");
    let o = misrate(&["simulate", "--config", cfg.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read(a.join("checkpoints.tsv")).unwrap(),
        fs::read(c.join("checkpoints.tsv")).unwrap()
    );
}

#[test]
fn seed_override_changes_manifest() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), "", &grid_members());
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = misrate(&["shells", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read_to_string(out.join("shells.tsv")).unwrap()
    };
    let (a, b) = (run("1", "a"), run("2", "b"));
    let first_line = |s: &str| s.lines().next().unwrap().to_string();
    assert_ne!(first_line(&a), first_line(&b));
    assert!(a.contains("\"master_seed\":1"));
}

#[test]
fn property_failure_exits_one() {
    let tmp = TempDir::new().unwrap();
    // four observations cannot push the mass below 1e-6
    let cfg = small_config(tmp.path(), "pass_level = 0.000001", &grid_members());
    let out = tmp.path().join("out");
    let o = misrate(&["simulate", "--config", cfg.to_str().unwrap(), "--n", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("status\tfail"));
}

#[test]
fn invalid_configs_exit_two_with_context() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path(), "", &[("ok", [0.6, 0.4]), ("short", [0.55, 0.43])]);
    let o = misrate(&["project", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("record 1, `short`"), "{}", stderr(&o));

    let cfg = small_config(tmp.path(), "", &grid_members());
    let text = fs::read_to_string(&cfg).unwrap().replace("replications = 20", "replications = -1");
    fs::write(&cfg, text).unwrap();
    let o = misrate(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`replications`"), "{}", stderr(&o));

    let o = misrate(&["project", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&misrate(&["frobnicate"])), 2);
    assert_eq!(code(&misrate(&[])), 2);
    assert_eq!(code(&misrate(&["simulate"])), 2);
    let o = misrate(&["verify-decay", "--config", GRID_CONFIG, "--exact", "--monte-carlo"]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&misrate(&["--help"])), 0);
}

#[test]
fn remaining_subcommands_pass_on_the_grid() {
    let tmp = TempDir::new().unwrap();
    for (cmd, file) in [
        ("cover", "cover.tsv"),
        ("conditions", "prior_ratio.tsv"),
        ("shells", "shells.tsv"),
        ("verify-decay", "decay.tsv"),
    ] {
        let out = tmp.path().join(cmd);
        let o = misrate(&[cmd, "--config", GRID_CONFIG, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{cmd}: {}{}", stdout(&o), stderr(&o));
        assert!(out.join(file).exists(), "{cmd}");
        assert!(out.join("summary.json").exists());
    }
}

#[test]
fn verify_decay_monte_carlo_mode_is_recorded() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("mc");
    let o = misrate(&[
        "verify-decay", "--config", GRID_CONFIG, "--monte-carlo", "--replications", "2000", "--n", "20",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let decay = fs::read_to_string(out.join("decay.tsv")).unwrap();
    assert!(decay.contains("[\"mode\",\"monte-carlo\"]"));
    assert_eq!(decay.lines().count(), 1 + 1 + 21);
}

#[test]
fn exact_decay_beyond_enumeration_limit_is_a_usage_error() {
    let o = misrate(&["verify-decay", "--config", GRID_CONFIG, "--exact", "--n", "30", "--out", "/tmp/unused-misrate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Monte Carlo"), "{}", stderr(&o));
}
