//! End-to-end tests of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_switchmimo"))
        .args(args)
        .output()
        .expect("spawn cli")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn limits_prints_closed_forms() {
    let o = cli(&["limits", "-n", "64", "-u", "3", "-q", "4"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("gamma=0.636620"), "{s}");
    assert!(s.contains("sinr_limit=13.5812"), "{s}");
    assert!(s.contains("rate_limit=3.8660"), "{s}");
}

#[test]
fn limits_reads_system_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"system": {"N": 64, "U": 3, "NQ": 4}}"#);
    let o = cli(&["limits", "--config", &cfg]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("sinr_limit=13.5812"));
    let o = cli(&["limits", "-n", "64"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("system.U"));
}

#[test]
fn nf_evaluates_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "nf.json",
        r#"{"nf": {"chain": [{"label": "lna", "gain_db": 22, "nf_db": 5},
                             {"label": "mixer", "gain_db": 0, "nf_db": 12}]}}"#,
    );
    let o = cli(&["nf", "--config", &cfg]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("composite_nf_db=5.13"));
}

#[test]
fn missing_config_names_path() {
    let o = cli(&["fig2", "--config", "/no/such/dir/run.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/no/such/dir/run.json"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"run": {"trials": 3, "speed": 9}}"#);
    let o = cli(&["fig2", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("speed"));
}

#[test]
fn invalid_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"run": {"trials": 0}}"#);
    let o = cli(&["fig3", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.trials"));
}

#[test]
fn unknown_flag_is_rejected() {
    let o = cli(&["fig2", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["fig2", "fig3", "oracle-gap", "nf", "limits", "validate"] {
        let o = cli(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}

#[test]
fn oversized_search_is_a_runtime_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"system": {"N": 16, "U": 1, "NQ": 4}, "run": {"trials": 2}}"#);
    let out = dir.path().join("gap.csv");
    let o = cli(&["oracle-gap", "--config", &cfg, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("search too large"));
    assert!(!out.exists());
}

#[test]
fn oracle_gap_small_instances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"system": {"N": 5, "U": 1, "NQ": 2}, "run": {"trials": 30, "seed": 4}}"#);
    let o = cli(&["oracle-gap", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let violations = s.lines().find(|l| l.contains("dominance_violations")).unwrap();
    assert!(violations.contains(",0.0,") || violations.contains(",0,"), "{violations}");
}

#[test]
fn fig2_json_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"sweep": {"n_list": [32], "nq_list": [4]}, "run": {"trials": 5, "seed": 1},
            "output": {"format": "json"}}"#,
    );
    let a = cli(&["fig2", "--config", &cfg, "--seed", "9"]);
    assert!(a.status.success());
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["seed"], 9);
    let b = cli(&["fig2", "--config", &cfg, "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let c = cli(&["fig2", "--config", &cfg, "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn validate_runs_self_checks() {
    let o = cli(&["validate"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("[PASS] appendix identity"));
    assert!(s.lines().filter(|l| l.starts_with("[PASS]")).count() >= 6, "{s}");
}
