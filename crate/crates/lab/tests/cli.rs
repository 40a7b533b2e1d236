//! The `commutant` binary: exit codes, messages and the report command.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_commutant"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("experiment.toml");
    let text = format!(
        "seed = 2\ndimension = 60\n\n[model]\nname = \"lap-pos\"\n\n[[gauges]]\nfamily = \"schatten\"\np = 2.0\n{extra}"
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn passing_stage_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gauge-check", "--config"])
        .arg(config("diagonal-grid.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("gauge-check: pass"));
    for f in ["gauge_check.json", "gauge_check.csv", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn invalid_window_exits_two_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "\n[schedule]\ngauge = 0\nwindows = [[2, 8], [6, 7]]\n");
    let out = bin().args(["schedule", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("schedule.windows[1]"), "{}", stderr(&out));
}

#[test]
fn missing_section_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["decompose", "--config"])
        .arg(config("diagonal-grid.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at schedule"), "{}", stderr(&out));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn unreadable_config_exits_two() {
    let out = bin().args(["gauge-check", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_lands_in_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "\n[schedule]\ngauge = 0\nwindows = [[2, 8], [6, 16]]\n");
    let out = bin()
        .args(["schedule", "--seed", "99", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("run/schedule.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["seed"], 99);
    assert_eq!(v["kind"], "schedule");
}

#[test]
fn report_on_empty_directory_prints_notices() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("report").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let err = stderr(&out);
    assert!(err.contains("nothing to render"), "{err}");
    assert!(err.contains("no decomposition section"), "{err}");
}

#[test]
fn report_renders_schedule_curve() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "\n[schedule]\ngauge = 0\nwindows = [[2, 8], [6, 16]]\n");
    let run = dir.path().join("run");
    let out = bin().args(["schedule", "--config"]).arg(&path).arg("--out").arg(&run).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin().arg("report").arg("--out").arg(&run).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let curve = std::fs::read_to_string(run.join("plots/schedule_commutators.dat")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "k m r commutator_norm");
    assert_eq!(lines.len(), 3);
}

#[test]
fn report_needs_a_directory() {
    let out = bin().arg("report").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
