use std::path::Path;
use std::process::{Command, Output};

fn dbar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dbar")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut all = vec!["--out", out];
    all.extend_from_slice(args);
    dbar(&all)
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(dbar(&[]).status.code(), Some(2));
    assert_eq!(dbar(&["--experiment", "nope"]).status.code(), Some(2));
    assert_eq!(dbar(&["--experiment", "solve-cp1", "--format", "xml"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"solve-cp1\"\n[grid]\nrefine = 0\nwidth = 2\n");
    let out = dbar(&["--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.refine") && err.contains("grid.width"), "{err}");
}

#[test]
fn obstruction_table_text_is_aligned() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"obstruction-table\"\n[cone]\ngenus = 1\ndegree = 2\n");
    let out = run_in(dir.path(), &["--config", &cfg, "--format", "text"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| l.trim_start().starts_with(|c: char| c == '-' || c.is_ascii_digit())).collect();
    assert!(rows.len() >= 17);
    assert!(rows.windows(2).all(|w| w[0].len() == w[1].len()), "{text}");
    assert!(text.contains("PASS h1(M, O_M) equals the genus"));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--experiment", "solve-cp1", "--refine", "2", "--seed", "4"];
    let mut bytes = Vec::new();
    for _ in 0..2 {
        assert!(run_in(dir.path(), &args).status.code().is_some());
        bytes.push(std::fs::read(dir.path().join("report.json")).unwrap());
    }
    let (ra, rb) = (&bytes[0], &bytes[1]);
    assert_eq!(ra, rb);
    let v: serde_json::Value = serde_json::from_slice(ra).unwrap();
    assert_eq!(v["config"]["seeds"], serde_json::json!([4]));
    assert!(v["stages"].as_array().unwrap().iter().all(|s| s["grid"].is_string()));
}

#[test]
fn csv_of_three_refinements_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"solve-cp1\"\n[grid]\nn_r = 8\nrefine = 3\n");
    run_in(dir.path(), &["--config", &cfg, "--format", "csv"]);
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert!(csv.starts_with("level,grid,h,quantity,value,order"));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"solve-cp1\"\n[tolerances]\nseam = 1e-300\n");
    let out = run_in(dir.path(), &["--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL CP1 seam weak residual"));
}

#[test]
fn failed_stage_is_named_and_exits_with_one() {
    // O(-8) has no random smooth sections of weight 3, so the solve stage fails
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"solve-cp1\"\n[cp1]\nm = -8\n");
    let out = run_in(dir.path(), &["--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["stages"][0]["name"], "cp1 solve");
    assert!(v["stages"][0]["error"].is_string());
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"solve-cp1\"\nseeds = [1, 2]\n");
    run_in(dir.path(), &["--config", &cfg, "--experiment", "obstruction-table", "--seed", "9"]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(v["experiment"], "obstruction-table");
    assert_eq!(v["config"]["seeds"], serde_json::json!([9]));
}
