use std::path::Path;
use std::process::{Command, Output};

fn varbound(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varbound")).args(args).current_dir(dir).output().unwrap()
}

fn error_record(out: &Output) -> serde_json::Value {
    let line = String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or_default().to_string();
    serde_json::from_str(&line).unwrap_or_else(|e| panic!("stderr is not a JSON record ({e}): {line}"))
}

#[test]
fn malformed_problem_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "name = \"bad\"\ndim = [1, 1\n").unwrap();
    let out = varbound(&["omr", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["kind"], "parse");
}

#[test]
fn unknown_problem_and_grid_key_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = varbound(&["upper", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = varbound(&["omr", "poincare", "--grid", "q=3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = varbound(&["omr", "poincare", "--phi-degree", "two"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["kind"], "usage");
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = varbound(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify-measure"));
}

#[test]
fn reruns_write_identical_tables_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    for run in ["a", "b"] {
        let out = varbound(&["omr", "double_well", "--out", run], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["omr.csv", "omr_z_masses.csv", "omr_y_masses.csv", "omr.measure"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between runs");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["verb"], "omr");
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn extracted_measure_round_trips_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    assert!(varbound(&["omr", "well_1d", "--out", "run"], dir.path()).status.success());
    let out = varbound(&["verify-measure", "run/omr.measure", "--tol", "1e-8", "--out", "check"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn certificate_survives_check_and_fails_when_tampered() {
    let dir = tempfile::tempdir().unwrap();
    assert!(varbound(&["pdr", "solve", "poincare", "--out", "solve"], dir.path()).status.success());
    let out = varbound(&["pdr", "check", "solve/certificate.toml", "--out", "check"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("solve/certificate.toml")).unwrap();
    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("certified_value") { "certified_value = 1.0".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.path().join("solve/tampered.toml"), tampered).unwrap();
    let out = varbound(&["pdr", "check", "solve/tampered.toml", "--out", "check2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["error"]["kind"], "check_failed");
}
