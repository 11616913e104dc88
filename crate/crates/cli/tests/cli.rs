use std::path::Path;
use std::process::{Command, Output};

fn utilgasp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_utilgasp")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const DATA: &str = "x,u\n0,0\n2,0.45\n5,0.75\n8,0.93\n10,1\n";

#[test]
fn bench_table_two_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let first = utilgasp(dir.path(), &["bench", "--table", "2", "--seed", "1"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let csv = dir.path().join("results/table2.csv");
    let a = std::fs::read(&csv).unwrap();
    std::fs::remove_dir_all(dir.path().join("results")).unwrap();
    assert!(utilgasp(dir.path(), &["bench", "--table", "2", "--seed", "1"]).status.success());
    assert_eq!(a, std::fs::read(&csv).unwrap());
    assert!(dir.path().join("results/table2.json").exists());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 6 * 4);
}

#[test]
fn single_cell_matches_the_table() {
    let dir = tempfile::tempdir().unwrap();
    assert!(utilgasp(dir.path(), &["bench", "--table", "3", "--seed", "2"]).status.success());
    let table = std::fs::read_to_string(dir.path().join("results/table3.csv")).unwrap();
    let row = table.lines().find(|l| l.starts_with("GaSP,rho=-1,7,")).unwrap();
    let expected: f64 = row.split(',').nth(3).unwrap().parse().unwrap();

    let out = utilgasp(dir.path(), &["bench", "--table", "3", "--seed", "2", "--cell", "GaSP:rho=-1:7"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let cell: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cell["value"].as_f64().unwrap(), expected);
}

#[test]
fn prediction_at_design_points_returns_assessed_utilities() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), DATA).unwrap();
    let fit = utilgasp(dir.path(), &["fit", "--data", "d.csv", "--basis", "power:0.5", "--out", "nested/model.json"]);
    assert!(fit.status.success(), "{}", stderr(&fit));
    std::fs::write(dir.path().join("q.csv"), "x\n0\n2\n5\n8\n10\n").unwrap();
    let out = utilgasp(dir.path(), &["predict", "--model", "nested/model.json", "--points", "q.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,mean,lo95,hi95"));
    let utilities = [0.0, 0.45, 0.75, 0.93, 1.0];
    for (line, u) in lines.zip(utilities) {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!((v[1] - u).abs() < 1e-8, "{line}");
        assert!(v[3] - v[2] < 1e-6, "{line}");
    }
}

#[test]
fn predict_grid_and_curvature() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), DATA).unwrap();
    assert!(utilgasp(dir.path(), &["fit", "--data", "d.csv", "--out", "model.json"]).status.success());
    let out = utilgasp(dir.path(), &["predict", "--model", "model.json", "--grid", "11", "--out", "p/pred.csv"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("p/pred.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!(v[2] <= v[1] && v[1] <= v[3]);
    }
    let out = utilgasp(dir.path(), &["curvature", "--model", "model.json", "--grid", "200"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["label"], "Concave");
    assert_eq!(report["grid_size"], 200);
}

#[test]
fn unknown_flag_exits_two_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = utilgasp(dir.path(), &["bench", "--tabel", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage:"));
    let out = utilgasp(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_errors_exit_two_and_runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(utilgasp(dir.path(), &["bench", "--table", "9"]).status.code(), Some(2));
    assert_eq!(utilgasp(dir.path(), &["fit"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.csv"), "x,u\n0,0\n1,oops\n").unwrap();
    assert_eq!(utilgasp(dir.path(), &["fit", "--data", "bad.csv"]).status.code(), Some(2));
    std::fs::write(dir.path().join("d.csv"), DATA).unwrap();
    let out = utilgasp(dir.path(), &["fit", "--data", "d.csv", "--lower", "1", "--upper", "10"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert_eq!(utilgasp(dir.path(), &["fit", "--data", "missing.csv"]).status.code(), Some(1));
    assert_eq!(utilgasp(dir.path(), &["predict", "--model", "missing.json"]).status.code(), Some(1));
}

#[test]
fn flags_override_config_and_settings_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"bench": {"seed": 3, "out": "from-config"}}"#).unwrap();
    let out = utilgasp(dir.path(), &["--config", "c.json", "bench", "--table", "2", "--seed", "5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains(r#""seed":5"#), "{err}");
    assert!(err.contains(r#""out":"from-config""#), "{err}");
    assert!(dir.path().join("from-config/table2.csv").exists());

    std::fs::write(dir.path().join("typo.json"), r#"{"bench": {"sed": 3}}"#).unwrap();
    let out = utilgasp(dir.path(), &["bench", "--table", "2", "--config", "typo.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn version_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = utilgasp(dir.path(), &["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("utilgasp "));
}

#[test]
fn loo_and_holdout_write_results() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), DATA).unwrap();
    let out = utilgasp(dir.path(), &["loo", "--data", "d.csv", "--estimators", "GaSP,Mean", "--out", "r"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("r/loo.csv").exists());
    let out = utilgasp(
        dir.path(),
        &["holdout", "--data", "d.csv", "--estimators", "GaSP,LI", "--replicates", "4", "--out", "r"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("r/holdout.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let out = utilgasp(dir.path(), &["loo", "--data", "d.csv", "--estimators", "Spline"]);
    assert_eq!(out.status.code(), Some(2));
}
