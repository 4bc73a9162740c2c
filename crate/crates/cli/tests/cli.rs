use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use psido_core::io::load_field;

fn psido(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psido"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn read_report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn solve_writes_reports_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("u.bin");
    let out = psido(&[
        "solve",
        "--config",
        &config("solve_heat.json"),
        "--out",
        dir.path().to_str().unwrap(),
        "--dump-field",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "scenario,case,input_params,measured,theory,slope,stderr,verdict"
    );
    let report = read_report(dir.path());
    assert_eq!(report["scenario"], "solve");
    let u = load_field(&dump).unwrap();
    assert_eq!(u.grid().n(), 128);
    assert!(u.slice(0).iter().all(|v| v.norm() == 0.0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS residual_halving"));
}

#[test]
fn verify_passing_scenario_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = psido(&[
        "--sequential",
        "verify",
        "weights-audit",
        "--config",
        &config("weights_audit_mixed.json"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_report(dir.path());
    assert_eq!(report["scenario"], "weights_audit");
    assert!(report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["verdict"] != "fail"));
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.json");
    std::fs::write(
        &cfg,
        r#"{ "symbol": { "kind": "fractional_laplacian", "gamma": 2.0 },
             "grid": { "d": 1, "L": 8.0, "N": 256, "T": 2.25, "Nt": 144 },
             "sweep": { "epsilons": [0.0], "tcuts": [0.5, 1.0, 2.0], "level": 2, "box_indices": [1, 0] } }"#,
    )
    .unwrap();
    let out = psido(&[
        "verify",
        "hormander",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.lines().any(|l| l.ends_with(",fail")));
    assert!(csv
        .lines()
        .any(|l| l.starts_with("hormander,identical_pairs,")));
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = psido(&["verify", "apriori", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = psido(&["verify", "bogus", "--config", &config("solve_heat.json")]);
    assert_eq!(out.status.code(), Some(2));
    // the solve scenario needs a symbol
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{ "grid": { "d": 1, "L": 8.0, "N": 64, "T": 1.0, "Nt": 16 } }"#,
    )
    .unwrap();
    let out = psido(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}
