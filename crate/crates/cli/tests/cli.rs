//! End-to-end behaviour of the `rrshift` binary: exit codes and outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rrshift_core::scenario::Scenario;
use serde_json::Value;

fn rrshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrshift")).args(args).env_remove("RRSHIFT_THREADS").output().unwrap()
}

fn scenario_json(name: &str) -> Value {
    serde_json::to_value(Scenario::standard(name).unwrap()).unwrap()
}

fn write(dir: &Path, file: &str, v: &Value) -> PathBuf {
    let p = dir.join(file);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn serialized_scenario_round_trips_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "collinear.json", &scenario_json("collinear"));
    let out = dir.path().join("report.json");
    let o = rrshift(&["shift", "--scenario", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["pass"], Value::Bool(true));
    assert!(r["max_residual"].as_f64().unwrap() < 1e-5);
}

#[test]
fn missing_required_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = scenario_json("oblique");
    v.as_object_mut().unwrap().remove("mass");
    let input = write(dir.path(), "bad.json", &v);
    let o = rrshift(&["shift", "--scenario", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass"));
}

#[test]
fn unreadable_scenario_is_a_usage_error() {
    let o = rrshift(&["shift", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unattainable_residual_threshold_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = scenario_json("oblique");
    v["tolerances"]["integrator"] = Value::from(1e-13);
    v["tolerances"]["residual"] = Value::from(1e-12);
    let input = write(dir.path(), "strict.json", &v);
    let out = dir.path().join("report.json");
    let o = rrshift(&["shift", "--scenario", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["pass"], Value::Bool(false));
    assert!(r["max_residual"].as_f64().unwrap() > 1e-12);
}

#[test]
fn serial_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |file: &str| {
        let out = dir.path().join(file);
        let o = rrshift(&["shift", "--scenario", "static", "--serial", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn unknown_suite_and_route_are_usage_errors() {
    assert_eq!(rrshift(&["verify", "--suite", "medium"]).status.code(), Some(2));
    assert_eq!(rrshift(&["shift", "--scenario", "weak", "--routes", "direct,sideways"]).status.code(), Some(2));
}

#[test]
fn csv_outputs_have_the_documented_headers() {
    let force = rrshift(&["force-profile", "--scenario", "weak", "--samples", "11"]);
    assert_eq!(force.status.code(), Some(0));
    let text = String::from_utf8(force.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,F0,F1,F2,F3,fx,fy,fz,larmor_power"));
    assert_eq!(lines.count(), 11);

    let dir = tempfile::tempdir().unwrap();
    let dirs = dir.path().join("dirs.txt");
    std::fs::write(&dirs, "0 0 1\n0.6 0 0.8\n").unwrap();
    let mut v = scenario_json("weak");
    v["spectrum"] = serde_json::json!({"k_min": 1.0, "k_max": 4.0, "count": 3});
    let input = write(dir.path(), "weak.json", &v);
    let s = rrshift(&["spectrum", "--scenario", input.to_str().unwrap(), "--directions", dirs.to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let text = String::from_utf8(s.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
    assert!(text.lines().next().unwrap().starts_with("k,"));
}
