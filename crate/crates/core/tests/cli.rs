use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fgnls::grid::FieldGrid;
use serde_json::Value;
use tempfile::TempDir;

const EXAMPLE_G2: &str = r#"{"mode": "focusing", "alphas": [[0.1, 2], [0, 0.5], [-0.1, 1]]}"#;
const BANDS: &str = r#"{"mode": "defocusing", "bands": [[0, 1], [2, 2.5]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fgnls"))
}

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path) -> Output {
    bin().args(args).arg("--config").arg(cfg).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn periods_example_surface() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.json", &format!(r#"{{"surface": {EXAMPLE_G2}}}"#));
    let out = run(&["periods"], &cfg);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for k in ["tau_symmetric", "im_tau_positive_definite", "re_tau_pattern", "re_u_infinity", "flow_vectors_real"] {
        assert_eq!(v["checks"][k], Value::Bool(true), "{k}");
    }
    assert_eq!(v["tau"].as_array().unwrap().len(), 2);
}

#[test]
fn periods_defocusing_and_surface_file() {
    let dir = TempDir::new().unwrap();
    config(dir.path(), "bands.json", BANDS);
    let cfg = config(dir.path(), "c.json", r#"{"surface_file": "bands.json"}"#);
    let out = run(&["periods"], &cfg);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["checks"]["re_tau_pattern"], Value::Bool(true));
}

#[test]
fn malformed_input_is_exit_one() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.json", r#"{"surface": {"mode": "focusing", "alphas": [[0, 1]"#);
    let out = run(&["periods"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let cfg = config(dir.path(), "d.json", r#"{"surface": {"bands": [[0, 1], [0.5, 2]]}}"#);
    assert_eq!(run(&["periods"], &cfg).status.code(), Some(1));
    assert_eq!(bin().args(["periods", "--config", "/nonexistent.json"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["frobnicate"]).output().unwrap().status.code(), Some(1));
    let cfg = config(dir.path(), "e.json", &format!(r#"{{"surface": {EXAMPLE_G2}}}"#));
    assert_eq!(run(&["periods", "--format", "csv"], &cfg).status.code(), Some(1));
}

#[test]
fn fgrid_example_surface() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.json", &format!(r#"{{"surface": {EXAMPLE_G2}, "grid": 200}}"#));
    let csv = dir.path().join("f.csv");
    let out = run(&["fgrid", "--out", csv.to_str().unwrap()], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# axes: w1=0:0.995:200,w2=0:0.995:200\nw1,w2,re,im,abs\n"));
    let grid = FieldGrid::from_csv(&text).unwrap();
    assert_eq!(grid.values.len(), 40_000);
    let (max, at_max) = grid.max_abs();
    let (min, at_min) = grid.min_abs();
    assert!((max - 1.0).abs() < 1e-9 && at_max == vec![0.0, 0.0]);
    assert!((min - 1.0 / 7.0).abs() < 1e-8 && at_min == vec![0.5, 0.5], "{min} {at_min:?}");

    let again = dir.path().join("g.csv");
    run(&["fgrid", "--out", again.to_str().unwrap()], &cfg);
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn fgrid_single_point() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.json", &format!(r#"{{"surface": {EXAMPLE_G2}, "grid": 1}}"#));
    let out = run(&["fgrid"], &cfg);
    assert_eq!(out.status.code(), Some(0));
    let grid = FieldGrid::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(grid.values.len(), 1);
    assert!((grid.values[0].re - 1.0).abs() < 1e-10);
}

#[test]
fn fgrid_slices_in_json_for_genus_three() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        r#"{"random": {"mode": "focusing", "genus": 3}, "grid": 6, "format": "json"}"#,
    );
    let out = bin().args(["fgrid", "--seed", "4", "--threads", "1", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let slices = v.as_array().unwrap();
    assert_eq!(slices.len(), 3);
    assert_eq!(slices[2]["metadata"]["plane"], serde_json::json!([1, 2]));
    assert_eq!(slices[0]["abs"].as_array().unwrap().len(), 36);
}

#[test]
fn psigrid_genus_four_peak() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        r#"{"surface": {"alphas": [[0.2, 1], [0.1, 1], [0, 1], [-0.1, 1], [-0.2, 1]]},
            "x": [-1, 1], "t": [-0.5, 0.5], "nx": 21, "nt": 11}"#,
    );
    let out = bin().args(["psigrid", "--config"]).arg(&cfg).env("FGNLS_THREADS", "1").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let grid = FieldGrid::from_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let (max, at) = grid.max_abs();
    assert!((max - 5.0).abs() < 1e-6, "{max}");
    assert!(at.iter().all(|c| c.abs() < 1e-12));
}

#[test]
fn theta_command() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        dir.path(),
        "c.json",
        &format!(r#"{{"surface": {EXAMPLE_G2}, "z": [[[0, 0], [0, 0]], [[0.5, 0], [0.25, 0.1]]]}}"#),
    );
    let out = run(&["theta"], &cfg);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["values"].as_array().unwrap().len(), 2);
    assert!(v["certificate"]["tail_bound"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn check_passes_and_detects_corruption() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.json", &format!(r#"{{"surface": {EXAMPLE_G2}}}"#));
    let out = run(&["check"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["passed"], Value::Bool(true));

    let bad = config(dir.path(), "bad.json", &format!(r#"{{"surface": {EXAMPLE_G2}, "debug_tau_perturbation": 1e-3}}"#));
    let out = run(&["check"], &bad);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    let sym = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "tau_symmetric").unwrap();
    assert_eq!(sym["passed"], Value::Bool(false));
}

#[test]
fn check_defocusing_includes_bounds() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.json", &format!(r#"{{"surface": {BANDS}}}"#));
    let out = run(&["check"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&out);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["dnls_upper_bound", "dnls_lower_bound", "dnls_origin_equality"] {
        assert!(names.contains(&n), "{n}");
    }
}
