use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn antiito(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_antiito"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("ANTIITO_THREADS", t),
        None => cmd.env_remove("ANTIITO_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `(header, rows)` of a CSV artifact.
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    (header, rows)
}

fn meta<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    let prefix = format!("# {key}: ");
    text.lines().find_map(|l| l.strip_prefix(prefix.as_str()))
}

fn argmax(rows: &[Vec<String>]) -> f64 {
    let best = rows
        .iter()
        .max_by(|a, b| {
            a[1].parse::<f64>()
                .unwrap()
                .total_cmp(&b[1].parse::<f64>().unwrap())
        })
        .unwrap();
    best[0].parse().unwrap()
}

#[test]
fn stationary_table_and_header() {
    let o = antiito(&["stationary"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(meta(&text, "tool").unwrap().starts_with("antiito "));
    assert_eq!(meta(&text, "command"), Some("stationary"));
    assert!(meta(&text, "params")
        .unwrap()
        .contains("q=2.0000000000000000e0"));
    assert_eq!(meta(&text, "config_hash").unwrap().len(), 40);
    let k0: f64 = meta(&text, "k0").unwrap().parse().unwrap();
    assert!((k0 - 4.0).abs() < 1e-12);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["x", "p"]);
    assert_eq!(rows.len(), 1001);
}

#[test]
fn mode_independent_of_noise_level() {
    // σ² = 1 < 2(q - c) and σ² = 2.56 > 2(q - c): both peak at the carrying point.
    for sigma in ["1", "1.6"] {
        let o = antiito(&["stationary", "--sigma", sigma], None);
        let text = stdout(&o);
        let (_, rows) = parse_csv(&text);
        let step: f64 = rows[1][0].parse::<f64>().unwrap();
        assert!((argmax(&rows) - 1.0).abs() <= step, "sigma {sigma}");
    }
}

#[test]
fn killing_regime_density_decreases() {
    let o = antiito(
        &[
            "stationary",
            "--q",
            "1",
            "--c",
            "2",
            "--sigma",
            "1.7320508075688772",
        ],
        None,
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(meta(&text, "regime"), Some("decreasing_mode"));
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows[0][1], "inf");
    let values: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn degenerate_regime_emits_sentinel() {
    let o = antiito(&["stationary", "--q", "1", "--c", "3"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let (header, rows) = parse_csv(&text);
    assert_eq!(header, ["degenerate"]);
    assert_eq!(rows, vec![vec!["true".to_owned()]]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn sweep_locates_transition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"params": {"q": 1, "r": 1, "v": 1, "c": 2, "sigma": 1},
            "sweep": {"parameter": "sigma_sq", "values": [1.0, 1.5, 2.0, 2.5, 3.0]}}"#,
    );
    let o = antiito(&["sweep", "--config", &cfg], None);
    assert!(o.status.success());
    let text = stdout(&o);
    let crit: f64 = meta(&text, "critical_sigma_sq").unwrap().parse().unwrap();
    assert_eq!(crit, 2.0);
    let (_, rows) = parse_csv(&text);
    let regimes: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(
        regimes,
        [
            "degenerate_at_zero",
            "degenerate_at_zero",
            "degenerate_at_zero",
            "decreasing_mode",
            "decreasing_mode"
        ]
    );
    assert!(rows.iter().all(|r| r[3].is_empty()));
}

#[test]
fn sweep_in_growth_regime_never_flips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{"sweep": {"parameter": "sigma", "values": [0.1, 0.5, 1.0, 2.0, 5.0, 20.0]}}"#,
    );
    let text = stdout(&antiito(&["sweep", "--config", &cfg], None));
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert_eq!(r[1], "robust_interior");
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn empty_sweep_is_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.json", r#"{"sweep": {"values": []}}"#);
    let o = antiito(&["sweep", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["value", "regime", "mode", "extinct_fraction"]);
    assert!(rows.is_empty());
}

#[test]
fn classify_reports_both_boundaries() {
    let o = antiito(&["classify", "--format", "json"], None);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["boundary"], "zero");
    assert_eq!(rows[1]["boundary"], "infinity");
    assert_eq!(v["meta"]["within_guarantee"], true);
    for r in rows {
        assert!(["exit", "natural", "entrance", "regular"].contains(&r["class"].as_str().unwrap()));
    }
}

#[test]
fn compare_near_deterministic_limit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cmp.json",
        r#"{"params": {"q": 2, "r": 1, "v": 1, "c": 1, "sigma": 1e-6},
            "sim": {"t_final": 2, "n_paths": 200}}"#,
    );
    let o = antiito(&["compare", "--config", &cfg, "--format", "json"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["eradicated_by"], "none");
    for r in v["rows"].as_array().unwrap() {
        assert_eq!(r["extinct_fraction"], 0.0);
        assert!((r["mean"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn compare_rejects_killing_regime() {
    let o = antiito(&["compare", "--q", "1", "--c", "2"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fpe_run_reports_conservation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "fpe.json",
        r#"{"fpe": {"n_cells": 256, "x_max": 8, "t_final": 5, "dt": 0.05, "snapshots": [1]}}"#,
    );
    let o = antiito(&["fpe", "--config", &cfg], None);
    assert!(o.status.success());
    let text = stdout(&o);
    let mass: f64 = meta(&text, "mass").unwrap().parse().unwrap();
    assert!((mass - 1.0).abs() < 1e-9);
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 2 * 256);
}

#[test]
fn output_file_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.json");
    let o = antiito(
        &[
            "stationary",
            "--format",
            "json",
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1001);
    assert_eq!(v["header"]["command"], "stationary");
}

#[test]
fn config_hash_ignores_output_location() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    antiito(&["classify", "--out", a.to_str().unwrap()], None);
    antiito(&["classify", "--out", b.to_str().unwrap()], None);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        antiito(&["stationary", "--q", "-1"], None).status.code(),
        Some(2)
    );
    assert_eq!(antiito(&["bogus"], None).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(
        antiito(&["simulate", "--config", missing.to_str().unwrap()], None)
            .status
            .code(),
        Some(2)
    );
    let unknown = write_config(dir.path(), "u.json", r#"{"params": {"q": 1}, "colour": 3}"#);
    assert_eq!(
        antiito(&["simulate", "--config", &unknown], None)
            .status
            .code(),
        Some(2)
    );
    let mismatch = write_config(dir.path(), "m.json", r#"{"command": "fpe"}"#);
    assert_eq!(
        antiito(&["simulate", "--config", &mismatch], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        antiito(&["stationary"], Some("many")).status.code(),
        Some(2)
    );
    let blowup = write_config(
        dir.path(),
        "b.json",
        r#"{"sim": {"scheme": "log_transform", "dt": 0.01, "t_final": 1, "n_paths": 10}}"#,
    );
    let o = antiito(&["simulate", "--config", &blowup, "--q", "1e5"], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("blew up"));
}

#[test]
fn simulate_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{"sim": {"t_final": 2, "n_paths": 600, "seed": 17}}"#,
    );
    let outputs: Vec<Vec<u8>> = ["1", "4", "0"]
        .iter()
        .map(|t| {
            let o = antiito(&["simulate", "--config", &cfg], Some(t));
            assert!(o.status.success());
            o.stdout
        })
        .collect();
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(meta(&text, "seed"), Some("17"));
}
