mod common;

use std::fs;
use std::path::Path;

use common::default_with_duration;
use esran::campaign::{run_single, CampaignSpec, ControllerKind};
use esran::service::fault::FaultProfile;
use esran::service::http::spawn_server;
use esran::service::logs::{
    LogMode, ACTIONS_FILE, AGGREGATED_FILE, CELL_REPORTS_FILE, UE_NEIGHBOUR_FILE, UE_SERVING_FILE,
};
use esran::service::{RicService, ServiceConfig};
use esran::sim::{Action, CellReport, UeNeighbourReport, UeServingReport};

const LOG_FILES: [&str; 5] = [CELL_REPORTS_FILE, UE_SERVING_FILE, UE_NEIGHBOUR_FILE, AGGREGATED_FILE, ACTIONS_FILE];

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

fn spec(dir: &Path, duration_s: f64) -> CampaignSpec {
    let mut spec = CampaignSpec::new(dir);
    spec.duration_s = duration_s;
    spec
}

#[test]
fn hundred_tick_run_writes_one_row_group_per_tick() {
    let tmp = tempfile::tempdir().unwrap();
    let svc = RicService::new(ServiceConfig::default());
    let id = svc.start(default_with_duration(2, 300.0), Some(tmp.path().to_path_buf())).unwrap();
    svc.step(&id, 100).unwrap();
    svc.stop(&id).unwrap();

    let agg = lines(&tmp.path().join(AGGREGATED_FILE));
    assert_eq!(agg.len(), 101);
    assert_eq!(lines(&tmp.path().join(CELL_REPORTS_FILE)).len(), 1 + 100 * 51);
    assert_eq!(lines(&tmp.path().join(UE_SERVING_FILE)).len(), 1 + 100 * 246);
    let stamps: Vec<f64> = agg[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(stamps, (1..=100).map(f64::from).collect::<Vec<_>>());
}

#[test]
fn aggregated_only_mode_skips_report_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let svc = RicService::new(ServiceConfig {
        log_mode: LogMode::AggregatedOnly,
        ..Default::default()
    });
    let id = svc.start(default_with_duration(2, 30.0), Some(tmp.path().to_path_buf())).unwrap();
    svc.step(&id, 10).unwrap();
    svc.stop(&id).unwrap();
    assert_eq!(lines(&tmp.path().join(AGGREGATED_FILE)).len(), 11);
    assert!(!tmp.path().join(CELL_REPORTS_FILE).exists());
}

#[test]
fn headers_match_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    run_single(&spec(tmp.path(), 20.0), ControllerKind::Hybrid, 1, tmp.path(), &mut |_| {}).unwrap();
    let golden = [
        (CELL_REPORTS_FILE, include_str!("golden/cell_reports.header")),
        (UE_SERVING_FILE, include_str!("golden/ue_serving.header")),
        (UE_NEIGHBOUR_FILE, include_str!("golden/ue_neighbour.header")),
        (AGGREGATED_FILE, include_str!("golden/aggregated.header")),
        (ACTIONS_FILE, include_str!("golden/actions.header")),
    ];
    for (file, header) in golden {
        let text = fs::read_to_string(tmp.path().join(file)).unwrap();
        assert_eq!(text.lines().next().unwrap(), header.trim_end(), "{file}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = spec(a.path(), 400.0);
    let ra = run_single(&s, ControllerKind::Hybrid, 3, a.path(), &mut |_| {}).unwrap();
    let rb = run_single(&s, ControllerKind::Hybrid, 3, b.path(), &mut |_| {}).unwrap();
    assert_eq!(ra, rb);
    assert!(ra.commands > 0);
    for f in LOG_FILES {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between reruns");
    }

    let c = tempfile::tempdir().unwrap();
    run_single(&s, ControllerKind::Hybrid, 4, c.path(), &mut |_| {}).unwrap();
    assert_ne!(
        fs::read(a.path().join(AGGREGATED_FILE)).unwrap(),
        fs::read(c.path().join(AGGREGATED_FILE)).unwrap()
    );
}

#[test]
fn faults_never_reach_the_logs() {
    let clean = tempfile::tempdir().unwrap();
    let faulty = tempfile::tempdir().unwrap();
    let s = spec(clean.path(), 60.0);
    run_single(&s, ControllerKind::AllOn, 5, clean.path(), &mut |_| {}).unwrap();
    let mut f = s.clone();
    f.fault = FaultProfile {
        nan_probability: 0.5,
        duplicate_probability: 0.5,
        seed: 77,
    };
    run_single(&f, ControllerKind::AllOn, 5, faulty.path(), &mut |_| {}).unwrap();
    for file in LOG_FILES {
        let x = fs::read_to_string(clean.path().join(file)).unwrap();
        let y = fs::read_to_string(faulty.path().join(file)).unwrap();
        assert!(x == y, "{file} changed under fault injection");
        assert!(!y.contains("NaN"), "{file}");
    }
}

#[test]
fn unfaulted_http_reports_equal_logged_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let svc = RicService::new(ServiceConfig::default());
    let server = spawn_server(svc.clone(), "127.0.0.1:0").unwrap();
    let id = svc.start(default_with_duration(6, 60.0), Some(tmp.path().to_path_buf())).unwrap();
    svc.step(&id, 5).unwrap();

    let base = server.base_url();
    let get = |path: &str| -> String {
        ureq::get(&format!("{base}{path}"))
            .call()
            .unwrap()
            .body_mut()
            .read_to_string()
            .unwrap()
    };
    let cells: Vec<CellReport> = serde_json::from_str(&get("/kpm/cells?since=0")).unwrap();
    let serving: Vec<UeServingReport> = serde_json::from_str(&get("/kpm/ue-serving?since=0")).unwrap();
    let neighbours: Vec<UeNeighbourReport> = serde_json::from_str(&get("/kpm/ue-neighbours?since=0")).unwrap();
    svc.stop(&id).unwrap();

    assert_eq!(cells.len(), 5 * 51);
    assert_eq!(cells, read_rows::<CellReport>(&tmp.path().join(CELL_REPORTS_FILE)));
    assert_eq!(serving, read_rows::<UeServingReport>(&tmp.path().join(UE_SERVING_FILE)));
    assert_eq!(neighbours, read_rows::<UeNeighbourReport>(&tmp.path().join(UE_NEIGHBOUR_FILE)));
}

#[test]
fn stopping_mid_ramp_keeps_the_partial_ramp() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = default_with_duration(2, 300.0);
    let micro = sc.cells.iter().find(|c| !c.is_macro()).unwrap().clone();
    let svc = RicService::new(ServiceConfig::default());
    let id = svc.start(sc, Some(tmp.path().to_path_buf())).unwrap();
    svc.step(&id, 2).unwrap();
    svc.post_action(&micro.cell_id, Action::Off).unwrap();
    svc.step(&id, 4).unwrap();
    svc.stop(&id).unwrap();

    let rows: Vec<CellReport> = read_rows(&tmp.path().join(CELL_REPORTS_FILE));
    let offsets: Vec<Option<f64>> = rows
        .iter()
        .filter(|r| r.cell_id == micro.cell_id)
        .map(|r| r.tx_offset_db)
        .collect();
    assert_eq!(offsets, vec![Some(0.0), Some(0.0), Some(-3.0), Some(-6.0), Some(-9.0), Some(-12.0)]);
}
