use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn droplet(dir: &Path, args: &[&str], config: Option<&Value>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_droplet"));
    cmd.current_dir(dir).args(args).arg("--out").arg(dir.join("out"));
    if let Some(cfg) = config {
        let path = dir.join("config.json");
        fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json_file(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Header and rows of a CSV file without quoted fields.
fn table(dir: &Path, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let text = read(dir, name);
    assert!(!text.contains('\r'));
    let mut lines = text.lines().map(|l| l.split(',').map(String::from).collect::<Vec<_>>());
    let header = lines.next().unwrap();
    (header, lines.collect())
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn ball_report_and_determinism() {
    let dir = TempDir::new().unwrap();
    let out = droplet(dir.path(), &["ball"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = read(dir.path(), "ball.json");
    let v: Value = serde_json::from_str(&first).unwrap();
    assert!(v["J_ball"].as_f64().unwrap() <= 0.0);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert!(v["seed"].is_u64());
    assert!(v["boundary"]["trace"].is_f64());
    assert_eq!(v["config"]["solver"]["N_r"], 128);

    assert!(droplet(dir.path(), &["ball"], None).status.success());
    assert_eq!(read(dir.path(), "ball.json"), first);
}

#[test]
fn uncharged_ball_energy_is_the_sphere_area() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"params": {"n": 3, "beta": 2.0, "K": 1.0, "Q": 0.0}});
    assert!(droplet(dir.path(), &["ball"], Some(&cfg)).status.success());
    let f = json_file(dir.path(), "ball.json")["F"].as_f64().unwrap();
    assert!((f - 4.0 * PI).abs() <= 1e-12);
}

#[test]
fn invalid_configurations_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    for cfg in [
        json!({"params": {"n": 3, "beta": 1.0, "K": 1.0, "Q": 0.0}}),
        json!({"params": {"n": 3, "beta": 2.0, "K": 1.0, "Q": 0.0}, "solver": {"cg_tol": 0.0}}),
        json!({"sweep": {"seeds": []}}),
        json!({"unknown": 1}),
    ] {
        for sub in ["ball", "verify"] {
            let out = droplet(dir.path(), &[sub], Some(&cfg));
            assert_eq!(out.status.code(), Some(2), "{cfg} {sub}");
        }
    }
    let out = Command::new(env!("CARGO_BIN_EXE_droplet"))
        .args(["ball", "--config"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_table_and_summary() {
    let dir = TempDir::new().unwrap();
    assert!(droplet(dir.path(), &["spectrum"], None).status.success());
    let (header, rows) = table(dir.path(), "spectrum.csv");
    assert_eq!(rows.len(), 59);
    let m = column(&header, "m");
    assert_eq!(rows[0][m], "2");
    assert_eq!(rows[58][m], "60");
    let hash = column(&header, "config_hash");
    assert!(rows.iter().all(|r| r[hash].len() == 64));

    let summary = json_file(dir.path(), "spectrum_summary.json");
    assert!(summary["asymptotics"]["slope"].as_f64().unwrap() > 0.0);
    assert!(summary["asymptotics"]["h_half_constant"].as_f64().unwrap() >= 0.0);
    let cal = &summary["calibration"];
    assert_eq!(cal["rows"].as_array().unwrap().len(), 7);
    assert_eq!(cal["pass"], true);
    assert!(cal["max_relative_error"].as_f64().unwrap() <= 0.02);
    assert!(summary["Q_c_note"].as_str().unwrap().starts_with("EXPLORATORY"));

    let (_, cal_rows) = table(dir.path(), "spectrum_calibration.csv");
    assert_eq!(cal_rows.len(), 7);
}

#[test]
fn sweep_covers_every_charge_and_seed() {
    let dir = TempDir::new().unwrap();
    let out = droplet(dir.path(), &["sweep", "--threads", "2"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(dir.path(), "sweep_summary.csv");
    assert_eq!(rows.len(), 30);
    let (q, seed, h1, conv) =
        (column(&header, "Q"), column(&header, "seed"), column(&header, "h1_final"), column(&header, "converged"));
    let keys: Vec<(f64, u64)> = rows.iter().map(|r| (r[q].parse().unwrap(), r[seed].parse().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    assert_eq!(keys, sorted);
    for r in &rows {
        assert!(r[h1].parse::<f64>().unwrap() <= 1e-3);
        assert_eq!(r[conv], "true");
    }
    let trace = read(dir.path(), "traces/flow_Q0.1_seed3.jsonl");
    let first: Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["seed"], 3);
    assert_eq!(first["Q"], 0.1);
    assert!(first["config_hash"].is_string());
    let (_, iterates) = table(dir.path(), "traces/flow_Q0.1_seed3.csv");
    assert_eq!(iterates.len(), trace.lines().count());
}

#[test]
fn flow_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"sweep": {"seeds": [4, 1]}});
    assert!(droplet(dir.path(), &["flow"], Some(&cfg)).status.success());
    let first = read(dir.path(), "flow_summary.csv");
    let trace = read(dir.path(), "traces/flow_Q0.1_seed4.jsonl");
    assert_eq!(first.lines().count(), 3);
    assert!(first.lines().nth(1).unwrap().starts_with("0.1,1,"));
    assert!(droplet(dir.path(), &["flow"], Some(&cfg)).status.success());
    assert_eq!(read(dir.path(), "flow_summary.csv"), first);
    assert_eq!(read(dir.path(), "traces/flow_Q0.1_seed4.jsonl"), trace);
}

#[test]
fn seed_override_replaces_the_seed_list() {
    let dir = TempDir::new().unwrap();
    assert!(droplet(dir.path(), &["flow", "--seed-override", "7"], None).status.success());
    let (header, rows) = table(dir.path(), "flow_summary.csv");
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][column(&header, "seed")], "7");
}

#[test]
fn aborted_flow_exits_with_code_3() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"flow": {"step": 1e-12}, "sweep": {"seeds": [0]}});
    let out = droplet(dir.path(), &["flow"], Some(&cfg));
    assert_eq!(out.status.code(), Some(3));
    let (header, rows) = table(dir.path(), "flow_summary.csv");
    assert_eq!(rows[0][column(&header, "status")], "step_underflow");
}

#[test]
fn verify_writes_a_passing_manifest() {
    let dir = TempDir::new().unwrap();
    let out = droplet(dir.path(), &["verify"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let (header, rows) = table(dir.path(), "verify.csv");
    assert_eq!(&header[..4], ["check", "measured", "bound", "pass"]);
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    for prefix in ["duality_", "pair_", "gradient_", "fuglede_", "taylor_", "energy_gap_", "spectrum_calibration"] {
        assert!(names.iter().any(|n| n.starts_with(prefix)), "{prefix}");
    }
    let mut unique = names.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), names.len());
    assert!(rows.iter().all(|r| r[3] == "true"));
}
