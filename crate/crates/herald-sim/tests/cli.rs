//! Black-box tests of the command-line interface: config handling, exit
//! codes, CSV layout, and determinism across worker counts.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_herald-sim"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("herald-sim-test-{}-{name}", std::process::id()));
    p
}

fn write_tmp(name: &str, contents: &str) -> PathBuf {
    let p = tmp(name);
    fs::write(&p, contents).unwrap();
    p
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const HEADER: &str = "C,lambda,delta_E2_over_gamma,t_CZ_gamma,P_numeric,P_analytic,infidelity,leakage,runtime_s,integrator_steps";

#[test]
fn gate_run_emits_json() {
    let cfg = write_tmp(
        "gate.json",
        r#"{"variant":"nonlocal","C":600,"lambda":10,"delta_E2_over_gamma":180}"#,
    );
    let out = bin().args(["gate", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["p_success"].as_f64().unwrap() - 0.5572).abs() < 1e-3);
    assert!(v["infidelity"].as_f64().unwrap() < 6e-4);
    fs::remove_file(cfg).unwrap();
}

#[test]
fn unknown_config_field_is_exit_code_1_with_field_name() {
    let cfg = write_tmp(
        "bad-field.json",
        r#"{"variant":"nonlocal","C":600,"lambda":10,"delta_E2_over_gamma":180,"lamdba":3}"#,
    );
    let out = bin().args(["gate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = stderr(&out);
    assert!(
        msg.contains("lamdba"),
        "diagnostic should name the field: {msg}"
    );
    fs::remove_file(cfg).unwrap();
}

#[test]
fn malformed_json_is_exit_code_1() {
    let cfg = write_tmp("not-json.json", "not json at all");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    fs::remove_file(cfg).unwrap();
}

#[test]
fn missing_config_is_exit_code_1() {
    let out = bin().args(["gate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn set_overrides_config_values() {
    let cfg = write_tmp(
        "gate-set.json",
        r#"{"variant":"nonlocal","C":600,"lambda":10,"delta_E2_over_gamma":180}"#,
    );
    let out = bin()
        .args(["gate", "--config"])
        .arg(&cfg)
        .args(["--set", "delta_E2_over_gamma=100", "--level", "analytic"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["params_echo"]["delta_e2"].as_f64().unwrap(), 100.0);
    assert_eq!(v["level"].as_str().unwrap(), "Analytic");
    fs::remove_file(cfg).unwrap();
}

#[test]
fn gnuplot_hint_prints_snippet() {
    let out = bin().args(["sweep", "--gnuplot-hint"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("gnuplot"));
    assert!(text.contains("columnhead"));
}

fn mask_runtime(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() == 10 && cols[8] != "runtime_s" {
                let mut cols = cols;
                cols[8] = "-";
                cols.join(",")
            } else {
                line.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn sweep_csv_layout_and_worker_determinism() {
    let cfg = write_tmp(
        "sweep.json",
        r#"{
            "variant": "nonlocal",
            "c_values": [600.0, 100.0],
            "lambda": 10.0,
            "delta_e2_over_gamma": [180.0, 100.0],
            "level": "full"
        }"#,
    );
    let out1 = tmp("sweep1.csv");
    let out3 = tmp("sweep3.csv");
    for (path, workers) in [(&out1, "1"), (&out3, "3")] {
        let out = bin()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .args(["--workers", workers, "--out"])
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let csv1 = fs::read_to_string(&out1).unwrap();
    let csv3 = fs::read_to_string(&out3).unwrap();

    let mut lines = csv1.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    // rows sorted by (C, detuning)
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[2])).collect();
    assert_eq!(
        keys,
        vec![
            (100.0, 100.0),
            (100.0, 180.0),
            (600.0, 100.0),
            (600.0, 180.0)
        ]
    );
    // identical output apart from wall-clock timing
    assert_eq!(mask_runtime(&csv1), mask_runtime(&csv3));

    // floats round-trip: reformatting a parsed value reproduces the text
    for line in csv1.lines().skip(1) {
        for (k, field) in line.split(',').enumerate() {
            if k == 8 || k == 9 {
                continue;
            }
            let x: f64 = field.parse().unwrap();
            assert_eq!(format!("{x}"), field, "column {k} not shortest round-trip");
        }
    }

    for p in [cfg, out1, out3] {
        fs::remove_file(p).unwrap();
    }
}

#[test]
fn workers_env_variable_is_honored() {
    let cfg = write_tmp(
        "sweep-env.json",
        r#"{
            "variant": "dfs",
            "c_values": [600.0],
            "lambda": 1.84,
            "delta_e2_over_gamma": [220.0],
            "level": "full"
        }"#,
    );
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .env("HERALD_SIM_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().nth(1).unwrap();
    let p: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((p - 0.7339).abs() < 1e-3);
    fs::remove_file(cfg).unwrap();
}

#[test]
fn detuning_range_object_expands() {
    let cfg = write_tmp(
        "sweep-range.json",
        r#"{
            "variant": "nonlocal",
            "c_values": [600.0],
            "lambda": 10.0,
            "delta_e2_over_gamma": {"start": 100.0, "stop": 140.0, "step": 20.0},
            "level": "analytic"
        }"#,
    );
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let detunings: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(detunings, vec![100.0, 120.0, 140.0]);
    fs::remove_file(cfg).unwrap();
}

#[test]
fn effective_dump_contains_all_provenances() {
    let cfg = write_tmp(
        "eff.json",
        r#"{"variant":"nonlocal","C":600,"lambda":10,"delta_E2_over_gamma":180}"#,
    );
    let out = bin()
        .args(["effective", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let sectors = v["sectors"].as_array().unwrap();
    assert_eq!(sectors.len(), 4);
    for s in sectors {
        assert!(s["numeric"].is_object());
        assert!(s["closed_form"].is_object());
        assert!(s["weak_drive"].is_object());
        assert!(s["delta_gap_numeric_vs_closed"].as_f64().unwrap() < 1e-8);
    }
    fs::remove_file(cfg).unwrap();
}

#[test]
fn tune_outputs_equalized_parameters() {
    let cfg = write_tmp(
        "tune.json",
        r#"{"variant":"dfs","C":600,"lambda":1.84,"delta_E2_over_gamma":220}"#,
    );
    let out = bin().args(["tune", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["params"]["delta_e"].is_number());
    assert_eq!(v["shifts"].as_array().unwrap().len(), 3);
    fs::remove_file(cfg).unwrap();
}
