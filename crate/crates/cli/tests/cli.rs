use std::path::Path;
use std::process::{Command, Output};

use esran::campaign::{SUMMARY_FILE, TABLE_FILE};
use esran::scenario::load_scenario;
use esran::service::logs::{ACTIONS_FILE, AGGREGATED_FILE, CELL_REPORTS_FILE};

fn esran(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esran"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn scenario_output_loads_back() {
    let o = esran(&["scenario", "--seed", "4"]);
    assert!(o.status.success());
    let sc = load_scenario(&stdout(&o)).unwrap();
    assert_eq!(sc.seed, 4);
    assert_eq!(sc.cells.len(), 51);
}

#[test]
fn short_campaign_writes_logs_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = esran(&[
        "run",
        "--controllers",
        "all_on,hybrid",
        "--seeds",
        "1",
        "--duration",
        "120",
        "--output-dir",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("controller,seeds,mean_power_kw"));
    assert_eq!(text.lines().count(), 3, "{text}");
    for f in [CELL_REPORTS_FILE, AGGREGATED_FILE, ACTIONS_FILE] {
        assert!(tmp.path().join("hybrid/1").join(f).is_file(), "{f}");
    }
    assert!(tmp.path().join(SUMMARY_FILE).is_file());
    assert!(tmp.path().join(TABLE_FILE).is_file());

    let again = esran(&["summarize", out]);
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    let rows: Vec<serde_json::Value> = stdout(&again)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn oracle_solves_a_tiny_instance() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = r#"{
        "macros": [{"id": "MACRO-0", "x": 0, "y": 0}],
        "micros": [{"id": "MICRO-0", "x": 100, "y": 0}, {"id": "MICRO-1", "x": 200, "y": 0}],
        "ues": [
            {"id": "a", "x": 0, "y": 0, "demand_mbps": 5},
            {"id": "b", "x": 0, "y": 0, "demand_mbps": 5},
            {"id": "c", "x": 0, "y": 0, "demand_mbps": 5}
        ],
        "r_dbm": [[-80, -90, null], [-80, -95, null], [null, -85, -100]],
        "r_min_dbm": -110,
        "c_max": 2
    }"#;
    let o = esran(&["oracle", &write(tmp.path(), "inst.json", inst)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sol: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(sol["z_star"], 1);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = esran(&["oracle", &write(tmp.path(), "bad.json", "{")]);
    assert!(!o.status.success());
    let o = esran(&["serve", "--pacing", "warp"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown pacing"));
}
