use std::process::{Command, Output};

use serde_json::Value;

fn cvsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn passing_run_exits_zero_with_versioned_json() {
    let out = cvsim(&["kerr", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["experiment"], "kerr");
    assert_eq!(v["config"]["trials"], 20);
    assert_eq!(v["passed"], true);
}

#[test]
fn exit_status_tracks_the_checks() {
    let out = cvsim(&["scaling"]);
    let v = json(&out);
    let expected = if v["passed"] == true { 0 } else { 1 };
    assert_eq!(out.status.code(), Some(expected));
}

#[test]
fn csv_output_is_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pointer.csv");
    let out = cvsim(&[
        "pointer",
        "--trials",
        "20",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.code().is_some_and(|c| c <= 1));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("#report"));
    assert!(text.contains("schema_version,1"));
}

#[test]
fn output_is_independent_of_thread_count() {
    let one = cvsim(&["undercount", "--trials", "2000", "--threads", "1"]);
    let many = cvsim(&["undercount", "--trials", "2000", "--threads", "4"]);
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.status.code(), many.status.code());
}

#[test]
fn seed_flag_changes_the_sample() {
    let a = cvsim(&["pointer", "--trials", "50", "--seed", "1"]);
    let b = cvsim(&["pointer", "--trials", "50", "--seed", "2"]);
    assert_eq!(json(&a)["seed"], 1);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn config_file_is_merged() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"seed": 99, "kerr": {"period": 4}}"#).unwrap();
    let out = cvsim(&["kerr", "--trials", "10", "--config", path.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["seed"], 99);
    assert_eq!(v["config"]["period"], 4);
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(cvsim(&["kerr", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(cvsim(&["kerr", "--config", "/nonexistent.json"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"kerr": {"unknown": 1}}"#).unwrap();
    assert_eq!(cvsim(&["kerr", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}
