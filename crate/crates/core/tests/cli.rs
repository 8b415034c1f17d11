use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn qfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfc")).args(args).output().unwrap()
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    qfc(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check(report: &serde_json::Value, name: &str) -> f64 {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn validate_flat_vacuum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("validate-state", &config("validate_flat.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert!(check(&r, "ccr_defect") <= 1e-12);
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert!((first[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn calderon_ln3_restriction() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("calderon", &config("calderon.json"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    let d = check(&r, &format!("beta={}.restriction_distance", 3f64.ln()));
    assert!(d <= 1e-9);
}

#[test]
fn reports_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run("thermal-sweep", &config("thermal_sweep.json"), a.path());
    let out = Command::new(env!("CARGO_BIN_EXE_qfc"))
        .env("QFC_THREADS", "1")
        .args(["thermal-sweep", "--config", config("thermal_sweep.json").to_str().unwrap(), "--out", b.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in ["report.json", "thermal_sweep.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn malformed_profile_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("validate_flat.json")).unwrap().replace("\"flat\"", "\"wormhole\"");
    let cfg = write_config(dir.path(), &text);
    let out = run("validate-state", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wormhole"));
}

#[test]
fn invalid_configs_are_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(config("validate_flat.json")).unwrap();
    for bad in [
        base.replace("\"mass\": 1.0", "\"mass\": -1.0"),
        base.replace("\"mass\": 1.0", "\"mass\": 1.0, \"colour\": 3"),
        base.replace("{ \"n_points\": 32", "{ \"n_points\": 2"),
        "not json".to_string(),
    ] {
        let cfg = write_config(dir.path(), &bad);
        assert_eq!(run("validate-state", &cfg, &dir.path().join("out")).status.code(), Some(2), "{bad}");
    }
    // experiment declared in the config must match the command
    assert_eq!(run("riccati", &config("validate_flat.json"), &dir.path().join("out")).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_qfc"))
        .env("QFC_THREADS", "zero")
        .args(["calderon", "--config", config("calderon.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    // β = 4 at m = 1 is nearly pure, so the mixedness check fails
    let text = std::fs::read_to_string(config("thermal_sweep.json")).unwrap().replace("2.0]", "4.0]");
    let cfg = write_config(dir.path(), &text);
    let out = run("thermal-sweep", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta=4.purity_defect"));
    assert_eq!(report(&dir.path().join("out"))["passed"], false);
}

#[test]
fn list_is_stable() {
    let a = qfc(&["list"]);
    let b = qfc(&["list"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("riccati") && text.contains("scatter") && text.contains("validate-state"));
}

#[test]
fn help_documents_csv_columns() {
    let out = qfc(&["calderon", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("dirichlet_ladder.csv: horizon,distance"));
}

#[test]
fn every_sample_config_parses() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        qfc::cli::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
