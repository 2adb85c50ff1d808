//! The `equilib` binary: exit codes, output files, determinism and the
//! report schema.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use equilib::app::{strip_timings, SolveReport};
use serde_json::Value;

const DISK: &str = r#""region": {"type": "disk", "center": [0.8, 0.0], "radius": 0.6}, "p": 0.46408803866182774"#;

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn equilib(mode: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equilib"))
        .args([mode, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn key_paths(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    if let Value::Object(map) = v {
        for (k, child) in map {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            out.insert(path.clone());
            key_paths(child, &path, out);
        }
    }
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{ \"region\": ");
    let out = equilib("solve", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed config"));
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = equilib("verify", &dir.path().join("nope.json"), &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inactive_constraint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"region": {"type": "disk", "center": [0.8, 0.0], "radius": 0.6}, "p": 0.2, "grid": {"R": 4.0, "n": 81}}"#;
    let cfg = write_config(dir.path(), "c.json", body);
    let out = equilib("solve", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("circular-law mass"));
}

#[test]
fn bad_thread_count_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{{DISK}, "grid": {{"R": 4.0, "n": 81}}}}"#));
    let out = Command::new(env!("CARGO_BIN_EXE_equilib"))
        .env("EQUILIB_THREADS", "zero")
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn halfspace_scan_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scan.json", r#"{"scan": {"a_values": [1.0, 1.4, 1.42, 2.0]}}"#);
    let out_dir = dir.path().join("out");
    let out = equilib("halfspace-scan", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&out_dir.join("halfspace_scan.json"));
    let verdicts: Vec<bool> = report["rows"].as_array().unwrap().iter().map(|r| r["fully_singular"].as_bool().unwrap()).collect();
    assert_eq!(verdicts, [false, false, true, true]);
    assert_eq!(report["monotone"], Value::Bool(true));
    let csv = fs::read_to_string(out_dir.join("halfspace_scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("a,fully_singular,worst_margin,worst_b,worst_y,mass_singular,mass_regular"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn verify_passes_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &format!(r#"{{{DISK}, "grid": {{"R": 4.0, "n": 201}}}}"#));
    let out_dir = dir.path().join("out");
    let out = equilib("verify", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let density = fs::read_to_string(out_dir.join("density.csv")).unwrap();
    let mut lines = density.lines();
    assert_eq!(lines.next(), Some("x,y,rho"));
    assert_eq!(lines.count(), 201 * 201);
    let singular = fs::read_to_string(out_dir.join("singular.csv")).unwrap();
    assert!(singular.starts_with("s,x,y,g\n"));
    let pgm = fs::read(out_dir.join("density.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n201 201\n255\n"));

    let text = fs::read_to_string(out_dir.join("report.json")).unwrap();
    let report: SolveReport = serde_json::from_str(&text).unwrap();
    assert!(report.verdict.unwrap().passed);
    assert!(report.c1 > report.c2.unwrap());
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again, text);
}

#[test]
fn coarse_verify_reports_failed_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", &format!(r#"{{{DISK}, "grid": {{"R": 4.0, "n": 81}}}}"#));
    let out = equilib("verify", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_line_case_writes_minus_inf() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"region": {"type": "halfplane", "a": 2.0}, "p": 1.0, "grid": {"R": 4.0, "n": 81},
                   "emit": {"density_csv": false, "density_pgm": false}}"#;
    let cfg = write_config(dir.path(), "h.json", body);
    let out_dir = dir.path().join("out");
    let out = equilib("solve", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out_dir.join("density.csv").exists());
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["c2"], Value::String("-inf".into()));
    assert!(report["verdict"].is_null());
}

#[test]
fn non_convergence_exits_3_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &format!(r#"{{{DISK}, "grid": {{"R": 4.0, "n": 81}}, "solver": {{"max_iter": 3}}}}"#),
    );
    let out_dir = dir.path().join("out");
    let out = equilib("solve", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(3));
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["status"], Value::String("numerical_failure".into()));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.json", &format!(r#"{{{DISK}, "grid": {{"R": 4.0, "n": 81}}}}"#));
    let runs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("run{k}"))).collect();
    for r in &runs {
        assert_eq!(equilib("solve", &cfg, r).status.code(), Some(0));
    }
    for f in ["density.csv", "singular.csv", "density.pgm"] {
        assert_eq!(fs::read(runs[0].join(f)).unwrap(), fs::read(runs[1].join(f)).unwrap(), "{f}");
    }
    let mut a = read_json(&runs[0].join("report.json"));
    let mut b = read_json(&runs[1].join("report.json"));
    strip_timings(&mut a);
    strip_timings(&mut b);
    assert_eq!(a, b);
}

#[test]
fn report_schema_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "d.json", &format!(r#"{{{DISK}, "grid": {{"R": 4.0, "n": 81}}}}"#));
    let out_dir = dir.path().join("out");
    equilib("verify", &cfg, &out_dir);
    let mut keys = BTreeSet::new();
    key_paths(&read_json(&out_dir.join("report.json")), "", &mut keys);
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_keys.txt");
    let golden: BTreeSet<String> = fs::read_to_string(golden_path).unwrap().lines().map(str::to_owned).collect();
    assert_eq!(keys, golden);
}

#[test]
fn oracle_compare_emits_the_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.json",
        &format!(r#"{{{DISK}, "grid": {{"R": 4.0, "n": 81}}, "oracle": {{"iterations": 2000}}}}"#),
    );
    let out_dir = dir.path().join("out");
    assert_eq!(equilib("oracle-compare", &cfg, &out_dir).status.code(), Some(0));
    let report = read_json(&out_dir.join("oracle.json"));
    for key in ["energy_oracle", "energy_solver", "l1_distance", "c1_est", "c2_est"] {
        assert!(report[key].is_number(), "{key}");
    }
    assert!(report["c1_est"].as_f64() > report["c2_est"].as_f64());
}
