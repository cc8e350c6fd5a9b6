use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::Command;

use lookahead_traffic::harness::{parse_config, run_config_file, run_experiment};
use lookahead_traffic::Error;

const BIN: &str = env!("CARGO_BIN_EXE_lookahead-traffic");

fn small_doc(out: &Path) -> String {
    format!(
        "preset = \"custom\"\nN = 40\nM = 2\nbeta = 2.0\nstart = 5\nK = 15\nn = 40\n\
         record_times = [0.0, 1.0, 2.5]\nlags = [1, 2]\nvariants = [\"old\", \"new\", \"empirical\"]\n\
         d = 1.0\npde = true\ndt_sweep = [0.05, 0.2]\noutput = {:?}\n",
        out.display().to_string()
    )
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let spec = parse_config(&small_doc(&a)).unwrap();
    run_experiment(&spec).unwrap();
    let first = read_all(&a);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "a1.csv",
            "closure.csv",
            "correlation.csv",
            "density.csv",
            "expsigma.csv",
            "manifest.toml",
            "sensitivity.csv"
        ]
    );

    // rerun from the written manifest into the same directory
    run_config_file(&a.join("manifest.toml")).unwrap();
    assert_eq!(read_all(&a), first);
}

#[test]
fn density_rows_are_unique_per_source() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = parse_config(&small_doc(tmp.path())).unwrap();
    run_experiment(&spec).unwrap();
    let mut reader = csv::Reader::from_path(tmp.path().join("density.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["time", "cell", "source", "value"]);
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.unwrap();
        let key = (row[0].to_string(), row[1].to_string(), row[2].to_string());
        assert!(seen.insert(key), "duplicate row {row:?}");
        let v: f64 = row[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
    }
    let sources: HashSet<String> = seen.iter().map(|k| k.2.clone()).collect();
    let expected: HashSet<String> = ["stochastic", "meso_old", "meso_new", "meso_emp", "pde"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(sources, expected);
    assert_eq!(seen.len(), 5 * 3 * 40);
}

#[test]
fn undefined_correlations_are_empty_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = parse_config(&small_doc(tmp.path())).unwrap();
    run_experiment(&spec).unwrap();
    let mut reader = csv::Reader::from_path(tmp.path().join("correlation.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3 * 40 * 2);
    // at t = 0 the state is deterministic, so every coefficient is undefined
    assert!(rows.iter().filter(|r| &r[0] == "0.0").all(|r| r[3].is_empty()));
    assert!(rows.iter().any(|r| !r[3].is_empty()));
}

#[test]
fn io_errors_name_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let spec = parse_config(&small_doc(&blocker.join("out"))).unwrap();
    match run_experiment(&spec) {
        Err(Error::Io { path, .. }) => assert!(path.starts_with(&blocker)),
        other => panic!("expected an I/O error, got {other:?}"),
    }
}

#[test]
fn cli_run_and_preset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    fs::write(&cfg, small_doc(&tmp.path().join("run"))).unwrap();
    let status = Command::new(BIN).arg("run").arg(&cfg).output().unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(tmp.path().join("run/density.csv").exists());

    let out = tmp.path().join("preset");
    let status = Command::new(BIN)
        .args([
            "preset",
            "front_tracking",
            "--N",
            "60",
            "--n",
            "20",
            "--K",
            "30",
            "--record_times",
            "[0.0, 1.0]",
        ])
        .arg("--output")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("scale = \"desk\""));
    assert!(manifest.contains("N = 60"));
    assert!(manifest.contains("preset = \"front_tracking\""));
    assert!(manifest.contains("closure: generalized"));
}

#[test]
fn cli_rejects_bad_input() {
    let status = Command::new(BIN)
        .args(["preset", "front_tracking", "--beta", "-1"])
        .output()
        .unwrap();
    assert!(!status.status.success());
    let err = String::from_utf8_lossy(&status.stderr);
    assert!(err.contains("beta"), "{err}");

    let status = Command::new(BIN)
        .args(["preset", "front_tracking", "--dt", "1.0"])
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("exceed 1"));

    let status = Command::new(BIN).args(["preset", "nonsense"]).output().unwrap();
    assert!(!status.status.success());

    let status = Command::new(BIN)
        .args(["run", "/nonexistent/config.toml"])
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("/nonexistent/config.toml"));
}

#[test]
fn cli_oracle_prints_reference_values() {
    for name in ["one-step", "two-step", "continuous", "jump"] {
        let out = Command::new(BIN).args(["oracle", name]).output().unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let values: Vec<f64> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("cell"))
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(values.len(), 6);
        let total: f64 = values.iter().sum();
        let expected = if name == "jump" { 1.0 } else { 3.0 };
        assert!((total - expected).abs() < 1e-12, "{name}: {total}");
    }
    assert!(!Command::new(BIN)
        .args(["oracle", "nope"])
        .output()
        .unwrap()
        .status
        .success());
}
