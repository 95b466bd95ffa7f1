use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn siolab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siolab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("runs siolab")
}

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("error is json")
}

#[test]
fn bundled_split_config_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(&["split", "--config", &config("split_lebesgue.json"), "--output", "split.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("split.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["config"]["level"], 3);

    let out = siolab(&["split-verify", "split.json", "--output", "check.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(read_json(&dir.path().join("check.json"))["passed"], true);

    let out = siolab(&["verify", "split.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn every_bundled_config_runs_and_verifies() {
    let cases = [
        ("muckenhoupt", "muckenhoupt_lebesgue.json"),
        ("necessity", "necessity_cauchy.json"),
        ("truncate-compare", "truncate_hilbert.json"),
        ("factor2", "factor2_hilbert.json"),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in cases {
        let out = siolab(&[cmd, "--config", &config(file), "--output", "r.json"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let out = siolab(&["verify", "r.json"], dir.path());
        assert_eq!(out.status.code(), Some(0), "verify {cmd}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(&["bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["code"], "usage");
    assert_eq!(err["error"]["exit"], 2);
}

#[test]
fn config_for_another_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"command": "opnorm"}"#).unwrap();
    let out = siolab(&["split", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["code"], "config");
}

#[test]
fn gaussian_schur_bound_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(&["schur-bound", "gaussian"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let b = report["result"]["bound"]["bound"].as_f64().unwrap();
    assert!((b - 2.0).abs() <= 1e-3, "{b}");
}

#[test]
fn generated_measures_round_trip_into_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(
        &["generate-measure", "--mu", "interleaved_grids:dimension=1,lo=0,hi=1,h=0.125", "--output", "g.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report = read_json(&dir.path().join("g.json"));
    let measures = report["result"]["measures"].as_array().unwrap();
    assert_eq!(measures.len(), 2);
    assert_eq!(measures[0]["points"].as_array().unwrap().len(), 8);

    // the two parts share no atom, so the Hilbert kernel needs no multiplier
    let out = siolab(&["opnorm", "--kernel", "hilbert", "--mu", "g.json#0", "--nu", "g.json#1"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let out = siolab(&["verify", "g.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(&["split", "--config", &config("split_lebesgue.json"), "--level", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["config"]["level"], 2);
    assert_eq!(report["config"]["seed"], 1);
    assert_eq!(report["result"]["partition"]["level"], 2);
}

#[test]
fn tampered_partition_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(
        &["split", "--mu", "lebesgue_grid:dimension=1,lo=0,hi=1,h=0.0009765625", "--level", "2", "--output", "s.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("s.json");
    let mut report = read_json(&path);
    let m = &mut report["result"]["partition"]["e1_masses"][0];
    *m = Value::from(m.as_f64().unwrap() * 2.0);
    std::fs::write(&path, serde_json::to_string(&report).unwrap()).unwrap();

    let out = siolab(&["split-verify", "s.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let check: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(check["passed"], false);
}

#[test]
fn module_errors_carry_a_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(&["opnorm", "--kernel", "hilbert", "--mu", "random_atoms:n=4,dimension=1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["code"], "diagonal_singularity");

    let out = siolab(&["muckenhoupt", "--mu", "random_atoms:n=4,dimension=1", "--p", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["error"]["code"].is_string());
}

#[test]
fn csv_tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = siolab(
        &["split", "--mu", "lebesgue_grid:dimension=1,lo=0,hi=1,h=0.0009765625", "--level", "2", "--csv", "b.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("b.csv")).unwrap();
    assert!(!rdr.headers().unwrap().is_empty());
    assert!(rdr.records().count() > 0);
}
