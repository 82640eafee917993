use std::path::PathBuf;
use std::process::{Command, Output};

use powersched::model::ScheduleReport;
use powersched::Instance;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powersched")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

#[test]
fn curve_csv_has_breakpoint_rows() {
    let sample = data("sample.json");
    let text = stdout(&[
        "curve", "--instance", sample.to_str().unwrap(), "--from", "1", "--to", "30", "--samples", "200", "--format", "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("energy,makespan,d1,d2,segment"));
    let energies: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    // 200 evenly spaced samples plus the two interior breakpoints
    assert_eq!(energies.len(), 202);
    assert!(energies.contains(&8.0) && energies.contains(&17.0));
    assert!(energies.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn curve_json_lists_breakpoints() {
    let sample = data("sample.json");
    let v = json(&["curve", "--instance", sample.to_str().unwrap(), "--from", "1", "--to", "30", "--format", "json"]);
    assert_eq!(v["breakpoints"], serde_json::json!([17.0, 8.0]));
}

#[test]
fn makespan_output_round_trips() {
    let sample = data("sample.json");
    let text = stdout(&["makespan", "--instance", sample.to_str().unwrap(), "--energy", "2"]);
    let report: ScheduleReport = serde_json::from_str(&text).unwrap();
    assert!((report.makespan - 16.0).abs() <= 1e-9);
    let instance = Instance::from_json_str(&std::fs::read_to_string(&sample).unwrap()).unwrap();
    let schedule = report.to_schedule(&instance).unwrap();
    assert!((schedule.total_energy() - 2.0).abs() <= 1e-9);
}

#[test]
fn makespan_by_deadline_and_energy_for_deadline() {
    let sample = data("sample.json");
    let p = sample.to_str().unwrap();
    let v = json(&["makespan", "--instance", p, "--deadline", "8"]);
    assert!((v["energy"].as_f64().unwrap() - 8.0).abs() <= 1e-9);
    let v = json(&["energy-for-deadline", "--instance", p, "--deadline", "6.5"]);
    assert!((v["energy"].as_f64().unwrap() - 17.0).abs() <= 1e-9);
}

#[test]
fn flow_relations_report() {
    let flow3 = data("flow3.json");
    let v = json(&["flow", "--instance", flow3.to_str().unwrap(), "--energy", "9"]);
    let relations = v["relations"][0].as_array().unwrap();
    assert_eq!(relations.len(), 2);
    for r in relations {
        assert!(r["residual"].as_f64().unwrap() <= 1e-6, "{r}");
    }
    assert!((v["energy"].as_f64().unwrap() - 9.0).abs() <= 9e-9);
}

#[test]
fn multiprocessor_instance() {
    let two = data("two_processors.json");
    let p = two.to_str().unwrap();
    let v = json(&["makespan", "--instance", p, "--energy", "6"]);
    assert_eq!(v["processors"].as_array().unwrap().len(), 2);
    let v = json(&["flow", "--instance", p, "--energy", "6"]);
    assert_eq!(v["relations"].as_array().unwrap().len(), 2);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn pinned_range_and_partition_demo() {
    let flow3 = data("flow3.json");
    let v = json(&["pinned-range", "--instance", flow3.to_str().unwrap(), "--from", "1", "--to", "100"]);
    let regime = v["regime"].as_array().unwrap();
    assert!((regime[1].as_f64().unwrap() - 11.54).abs() <= 0.01);

    let v = json(&["partition-demo", "--values", "1,2,3,4"]);
    assert_eq!(v["decision"], true);
    assert_eq!(v["budget"], 10.0);
    let v = json(&["partition-demo", "--values", "1,1,3"]);
    assert_eq!(v["decision"], false);
    assert!(v["witness"].is_null());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"jobs\": [").unwrap();
    let out = run(&["makespan", "--instance", bad.to_str().unwrap(), "--energy", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, r#"{"jobs": [{"release": 0, "work": -1}]}"#).unwrap();
    let out = run(&["makespan", "--instance", invalid.to_str().unwrap(), "--energy", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let sample = data("sample.json");
    let p = sample.to_str().unwrap();
    let out = run(&["makespan", "--instance", p, "--deadline", "6"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["makespan", "--instance", p, "--energy", "1", "--deadline", "9"]);
    assert_eq!(out.status.code(), Some(2));

    let flow3 = data("flow3.json");
    let out = run(&["flow", "--instance", flow3.to_str().unwrap(), "--energy", "9", "--max-iterations", "2"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["flow", "--instance", p, "--energy", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_file_and_deterministic_verify() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = run(&["verify", "--seed", "5", "--instances", "4", "--out", path.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["passed"], true);
}
