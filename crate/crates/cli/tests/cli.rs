use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basin-scope"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("BASIN_SCOPE_DEFAULT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stable_points(v: &Value) -> Vec<Vec<f64>> {
    v["points"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["stability"] == "stable")
        .map(|p| p["location"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

#[test]
fn toxin_fixed_points() {
    let dir = TempDir::new().unwrap();
    let o = run(&["fixed-points", "--system", "toxin_antitoxin"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut stable = stable_points(&json(&dir.path().join("fixed_points.json")));
    stable.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    assert_eq!(stable.len(), 2);
    assert!((stable[0][0] - 27.1517).abs() < 1e-3 && (stable[0][2] - 58.4429).abs() < 1e-3);
    assert!((stable[1][0] - 162.8103).abs() < 1e-3 && (stable[1][3] - 110.4375).abs() < 1e-3);
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "fixed-points");
    assert_eq!(m["outputs"], serde_json::json!(["fixed_points.json"]));
}

#[test]
fn unknown_system_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&["fixed-points", "--system", "nope"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown system `nope`"));
}

#[test]
fn toggle_has_two_stable_points_and_a_saddle() {
    let dir = TempDir::new().unwrap();
    let o = run(&["fixed-points", "--system", "toggle2d", "--params", "2,1000,4,1,1,1000,3,2"], dir.path());
    assert_eq!(code(&o), 0);
    let v = json(&dir.path().join("fixed_points.json"));
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert_eq!(stable_points(&v).len(), 2);
}

#[test]
fn isostable_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let o = run(&["isostable", "--system", "toggle2d", "--alpha", "0", "--budget", "60"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("manifest.json"));
    let listed: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in ["samples.csv", "volume_history.csv", "inner.csv", "outer.csv", "target.json"] {
        assert!(listed.contains(&f), "{f} missing from {listed:?}");
        assert!(dir.path().join(f).exists());
    }
    let samples = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(samples.starts_with("iter,x_1,x_2,oracle,role"));
}

#[test]
fn empty_isostable_fails_the_corner_check() {
    let dir = TempDir::new().unwrap();
    let o = run(&["isostable", "--system", "toggle2d", "--alpha", "0", "--mode", "abs"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle(lower) = 1"));
}

#[test]
fn single_threaded_runs_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["basin", "--system", "toggle2d", "--budget", "120", "--threads", "1", "--seed", "3"];
    assert_eq!(code(&run(&args, a.path())), 0);
    assert_eq!(code(&run(&args, b.path())), 0);
    for f in ["samples.csv", "volume_history.csv", "inner.csv", "outer.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_basin-scope"))
        .args(["fixed-points", "--system", "toggle2d", "--out-dir"])
        .arg(dir.path())
        .env("BASIN_SCOPE_DEFAULT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("manifest.json"))["threads"], 1);
}

#[test]
fn cross_section_checks_indices() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["cross-section", "--system", "toxin_antitoxin", "--indices", "3,5", "--values", "1,2"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let o = run(
        &["cross-section", "--system", "toggle2d", "--indices", "1", "--values", "1", "--budget", "30"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let section = json(&dir.path().join("section.json"));
    assert_eq!(section["free"], serde_json::json!([2]));
    // one free coordinate: every cover entry is an interval on the line
    let inner = fs::read_to_string(dir.path().join("inner.csv")).unwrap();
    assert_eq!(inner.lines().next(), Some("lower_1,upper_1"));
}

#[test]
fn bistability_map_single_cell() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &[
            "bistability-map",
            "--system",
            "toggle2d",
            "--params",
            "2,700,2,1,1,1000,2,1",
            "--indices",
            "4,8",
            "--d1",
            "1:1:1",
            "--d2",
            "2:2:1",
            "--seed-box",
            "0:1000,0:1100",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("bistability.csv")).unwrap();
    assert_eq!(csv.lines().collect::<Vec<_>>(), ["d1,d2,stable_count,undetermined", "1,2,2,0"]);
}

#[test]
fn compare_bounds_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = run(&["compare-bounds", "--system", "nonmon3", "--lower", "g1", "--mid", "f", "--upper", "g2"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&dir.path().join("compare_bounds.json"));
    assert_eq!(rep["containment"]["violations"].as_array().unwrap().len(), 0);
    let o = run(&["compare-bounds", "--system", "toggle2d", "--p-min", "q_max", "--p-max", "q_min"], dir.path());
    assert_eq!(code(&o), 4);
    let o = run(&["compare-bounds", "--system", "toggle2d", "--p-min", "q_min"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn check_monotone_reports_every_signature() {
    let dir = TempDir::new().unwrap();
    let o = run(&["check-monotone", "--system", "nonmon3", "--params", "f", "--all-signatures"], dir.path());
    assert_eq!(code(&o), 0);
    let v = json(&dir.path().join("check_monotone.json"));
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 8);
    assert!(entries.iter().all(|e| e["kamke_muller"]["verdict"] == "violated"));
}

#[test]
fn parse_check_accepts_builtins_and_rejects_bad_configs() {
    let dir = TempDir::new().unwrap();
    let o = run(&["parse-check", "--system", "toxin_antitoxin"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "name = \"bad\"\nn = 1\nm = 1\ncomponents = [\"p1 * (x1 + \"]\nparams = [1.0]\n\
         box_lower = [0.0]\nbox_upper = [1.0]\nsigma_x = [1]\n",
    )
    .unwrap();
    let o = run(&["parse-check", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("component 1"));
}
