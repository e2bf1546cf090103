use std::path::{Path, PathBuf};
use std::process::Command;

use ineqpanel_cli::manifest::{Manifest, StageStatus};
use ineqpanel_cli::report::{from_json, to_json, ClusterReport, DiagnoseReport, EstimateReport, UnitRootReport};
use ineqpanel_cli::{cmd_cluster, cmd_estimate, cmd_replicate, cmd_unitroot, ExitStatus, Format, RunConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn config(out: &Path) -> RunConfig {
    RunConfig {
        data: Some(fixture("synthetic_panel.csv")),
        scores: Some(fixture("synthetic_scores.csv")),
        calibration_reps: 2000,
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ineqpanel"));
    c.env_remove("INEQPANEL_OUT");
    c
}

fn scores_header() -> String {
    let mut h = String::from("country,pillar");
    for i in 1..=21 {
        h.push_str(&format!(",sub{i:02}"));
    }
    h
}

fn score_row(country: &str, base: f64) -> String {
    let mut r = format!("{country},{base}");
    for i in 0..21 {
        r.push_str(&format!(",{}", base + 0.01 * i as f64));
    }
    r
}

#[test]
fn missing_subindex_column_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("synthetic_scores.csv")).unwrap();
    let trimmed: String = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let kept: Vec<&str> = f.iter().enumerate().filter(|(i, _)| *i != 7).map(|(_, v)| *v).collect();
            kept.join(",") + "\n"
        })
        .collect();
    let path = dir.path().join("scores.csv");
    std::fs::write(&path, trimmed).unwrap();
    let out = bin()
        .args(["cluster", "--scores"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Judicial independence"), "{err}");
}

#[test]
fn two_country_split() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.csv");
    std::fs::write(&path, format!("{}\n{}\n{}\n", scores_header(), score_row("AA", 3.0), score_row("BB", 5.0))).unwrap();
    let cfg = RunConfig {
        scores: Some(path),
        out: dir.path().join("out"),
        ..RunConfig::default()
    };
    let out = cmd_cluster(&cfg).unwrap();
    assert_eq!(out.status, ExitStatus::Success);
    let report: ClusterReport = from_json(&std::fs::read_to_string(dir.path().join("out/clusters.json")).unwrap()).unwrap();
    assert_eq!(report.inclusive, vec!["BB"]);
    assert_eq!(report.extractive, vec!["AA"]);
    assert_eq!(report.threshold, 4.0);
}

#[test]
fn empty_regressor_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "regressors = \n").unwrap();
    let out = bin()
        .args(["estimate", "--config"])
        .arg(&cfg_path)
        .arg("--data")
        .arg(fixture("synthetic_panel.csv"))
        .arg("--scores")
        .arg(fixture("synthetic_scores.csv"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn json_reports_round_trip_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    cmd_replicate(&cfg).unwrap();
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    let c: ClusterReport = from_json(&read("clusters.json")).unwrap();
    assert_eq!(to_json(&c).unwrap(), read("clusters.json"));
    let u: UnitRootReport = from_json(&read("unitroot.json")).unwrap();
    assert_eq!(to_json(&u).unwrap(), read("unitroot.json"));
    let e: EstimateReport = from_json(&read("estimate.json")).unwrap();
    assert_eq!(to_json(&e).unwrap(), read("estimate.json"));
    let d: DiagnoseReport = from_json(&read("diagnose.json")).unwrap();
    assert_eq!(to_json(&d).unwrap(), read("diagnose.json"));
    let m: Manifest = from_json(&read("manifest.json")).unwrap();
    assert_eq!(to_json(&m).unwrap(), read("manifest.json"));
    assert_eq!(m.stages_ok, 5);
}

#[test]
fn replicate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = cmd_replicate(&config(a.path())).unwrap();
    let rb = cmd_replicate(&config(b.path())).unwrap();
    assert_eq!(ra.files.len(), rb.files.len());
    for (fa, fb) in ra.files.iter().zip(&rb.files) {
        assert_eq!(fa.file_name(), fb.file_name());
        assert_eq!(std::fs::read(fa).unwrap(), std::fs::read(fb).unwrap(), "{}", fa.display());
    }
}

#[test]
fn missing_panel_leaves_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["replicate", "--data"])
        .arg(dir.path().join("absent.csv"))
        .arg("--scores")
        .arg(fixture("synthetic_scores.csv"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let m: Manifest = from_json(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.stages_ok, 0);
    assert_eq!(m.stages[0].status, StageStatus::Failed);
    assert!(m.stages[1..].iter().all(|s| s.status == StageStatus::Skipped));
    assert!(m.inputs.iter().any(|i| i.role == "panel" && i.sha256.is_none()));
}

/// Renames one half of the scored countries so that cluster has no panel
/// data.
fn lopsided_scores(dir: &Path, keep_extractive: bool) -> PathBuf {
    let text = std::fs::read_to_string(fixture("synthetic_scores.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    for l in lines.iter_mut().skip(1) {
        if !keep_extractive && l.starts_with('E') {
            *l = format!("X{}", &l[1..]);
        }
        if keep_extractive && l.starts_with('I') {
            *l = format!("Y{}", &l[1..]);
        }
    }
    let p = dir.join(format!("scores_{keep_extractive}.csv"));
    std::fs::write(&p, lines.join("\n") + "\n").unwrap();
    p
}

#[test]
fn estimate_exit_codes_follow_cluster_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&dir.path().join("one"));
    cfg.scores = Some(lopsided_scores(dir.path(), false));
    let out = cmd_estimate(&cfg).unwrap();
    assert_eq!(out.status, ExitStatus::Success);
    assert!(out.warnings.iter().any(|w| w.contains("extractive cluster not estimated")));

    // Both halves renamed: nothing overlaps with the panel.
    let text = std::fs::read_to_string(lopsided_scores(dir.path(), false)).unwrap();
    let none = dir.path().join("none.csv");
    std::fs::write(&none, text.replace("\nI", "\nZ")).unwrap();
    cfg.scores = Some(none);
    cfg.out = dir.path().join("two");
    let out = cmd_estimate(&cfg).unwrap();
    assert_eq!(out.status, ExitStatus::Partial);
}

#[test]
fn unknown_battery_variable_is_a_row_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.apply("unitroot_variables = gini, missing_series").unwrap();
    let out = cmd_unitroot(&cfg).unwrap();
    assert_eq!(out.status, ExitStatus::Partial);
    let u: UnitRootReport = from_json(&std::fs::read_to_string(dir.path().join("unitroot.json")).unwrap()).unwrap();
    assert_eq!(u.n_errors(), 2);
    assert!(u.clusters[0].rows[0].verdict.is_some());
}

#[test]
fn format_subset_and_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("env-out");
    let out = bin()
        .env("INEQPANEL_OUT", &out_dir)
        .args(["estimate", "--format", "json", "--data"])
        .arg(fixture("synthetic_panel.csv"))
        .arg("--scores")
        .arg(fixture("synthetic_scores.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let mut names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, vec!["estimate.json"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Panel EGLS (Cross-section weights)"));
}

#[test]
fn text_only_run_writes_no_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.formats = vec![Format::Text];
    let out = cmd_replicate(&cfg).unwrap();
    assert!(out.files.iter().all(|f| {
        let n = f.file_name().unwrap().to_string_lossy();
        n.ends_with(".txt") || n == "manifest.json"
    }));
}
