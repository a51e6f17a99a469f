//! End-to-end checks of the command line binary: argument handling, file
//! formats, exit codes, and byte-level determinism of serialized output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capdisc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&o.stdout)
        )
    })
}

fn stderr_str(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("capdisc-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn repeated_runs_are_byte_identical_and_carry_the_schema() {
    let args = [
        "discrepancy",
        "--matrix",
        "1",
        "0",
        "0",
        "1",
        "--k",
        "6",
        "--mode",
        "exact",
    ];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success(), "stderr: {}", stderr_str(&first));
    assert_eq!(first.stdout, second.stdout);
    let v = stdout_json(&first);
    assert_eq!(v["schema"], "capdisc/1");
    assert_eq!(v["command"], "discrepancy");
    assert_eq!(v["report"]["method"]["kind"], "exact");
    assert_eq!(v["report"]["n"], 36);
}

#[test]
fn estimate_is_seeded_and_deterministic() {
    let args = [
        "discrepancy",
        "--k",
        "9",
        "--mode",
        "estimate",
        "--trials",
        "500",
        "--seed",
        "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["report"]["method"]["trials"], 500);
}

#[test]
fn oversized_exact_requests_fall_back_to_estimate_with_a_warning() {
    // K = 30 gives N = 900, above the default exact-mode limit of 600.
    let out = run(&["discrepancy", "--k", "30", "--trials", "400"]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let err = stderr_str(&out);
    assert!(
        err.contains("600"),
        "warning must name the exact-mode limit, got: {err}"
    );
    assert_eq!(stdout_json(&out)["report"]["method"]["kind"], "estimate");
}

#[test]
fn generated_csv_reingests_to_the_same_discrepancy() {
    let dir = tempdir("roundtrip");
    let csv = dir.join("pts.csv");
    let gen = run(&[
        "generate",
        "--matrix",
        "1",
        "0",
        "0",
        "1",
        "--k",
        "5",
        "--perturbation",
        "center",
        "--format",
        "csv",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert!(gen.status.success(), "stderr: {}", stderr_str(&gen));

    let direct = run(&["discrepancy", "--k", "5", "--mode", "exact"]);
    let ingested = run(&[
        "discrepancy",
        "--input",
        csv.to_str().unwrap(),
        "--k",
        "1",
        "--mode",
        "exact",
    ]);
    assert!(direct.status.success());
    assert!(
        ingested.status.success(),
        "stderr: {}",
        stderr_str(&ingested)
    );
    let d = stdout_json(&direct);
    let i = stdout_json(&ingested);
    assert_eq!(d["report"]["n"], i["report"]["n"]);
    let dv = d["report"]["value"].as_f64().unwrap();
    let iv = i["report"]["value"].as_f64().unwrap();
    assert_eq!(dv.to_bits(), iv.to_bits(), "direct {dv} vs ingested {iv}");
}

#[test]
fn invalid_configuration_exits_with_code_two() {
    let out = run(&["discrepancy", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!stderr_str(&out).is_empty());

    // Unknown flags are configuration errors too.
    let out = run(&["discrepancy", "--k", "5", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_code_three() {
    let out = run(&["bounds", "--matrix", "1", "2", "2", "4", "--k", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!stderr_str(&out).is_empty());
}

#[test]
fn config_file_replaces_the_subcommand() {
    let dir = tempdir("config");
    let path = dir.join("run.json");
    std::fs::write(
        &path,
        r#"{"command": "bounds", "matrix": [2.0, 0.0, 0.0, 2.0], "k": 10}"#,
    )
    .unwrap();
    let out = run(&["--config", path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let v = stdout_json(&out);
    assert_eq!(v["schema"], "capdisc/1");
    assert!(v["report"]["theorem_leading"].is_number());

    // Config and subcommand together is ambiguous.
    let both = run(&[
        "--config",
        path.to_str().unwrap(),
        "discrepancy",
        "--k",
        "4",
    ]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn output_files_are_written_atomically() {
    let dir = tempdir("atomic");
    let path = dir.join("report.json");
    let out = run(&[
        "discrepancy",
        "--k",
        "4",
        "--mode",
        "exact",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(path.exists());
    assert!(!dir.join("report.json.tmp").exists());
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["report"]["n"], 16);
}

#[test]
fn generate_writes_csv_rows_to_stdout() {
    let out = run(&["generate", "--k", "5", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("px,py,ix,iy"));
    assert_eq!(lines.filter(|l| !l.trim().is_empty()).count(), 25);
}

#[test]
fn diagonal_curve_count_through_the_binary() {
    let out = run(&["intersect", "--k", "5", "--curve", "diagonal"]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["count"], 10);
    assert!(v["report"]["bound"].as_f64().unwrap() >= 10.0);
}

#[test]
fn separation_payload_carries_the_scaled_value() {
    let out = run(&["separation", "--k", "10"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert_eq!(v["n"], 100);
    let scaled = v["scaled_by_n_three_quarters"].as_f64().unwrap();
    assert!((4.0..=13.0).contains(&scaled), "scaled {scaled}");
}

#[test]
fn clq_command_reports_the_unit_constant_window() {
    let out = run(&[
        "clq",
        "--centers",
        "8",
        "--heights",
        "8",
        "--samples",
        "32",
    ]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    let est = v["clq"].as_f64().unwrap();
    assert!((2.0..=3.0 + 1e-6).contains(&est), "estimate {est}");
}

#[test]
fn suite_prints_a_table_and_serializes_rows() {
    let dir = tempdir("suite");
    let path = dir.join("suite.json");
    let out = run(&[
        "paper-suite",
        "--trials",
        "20",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("sqrtN*D"), "missing header: {table}");
    assert!(table.contains("unit K=8"));
    assert!(table.contains("golden K=50"));

    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4]["n"], 691);
    assert!(rows[4]["certificate"].is_null());
}
