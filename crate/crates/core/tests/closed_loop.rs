mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::Duration;

use common::default_with_duration;
use esran::campaign::{run_single, CampaignSpec, ControllerKind, ScenarioSource};
use esran::power::ModeLabel;
use esran::scenario::CellKind;
use esran::service::client::{HttpRicClient, RicClient};
use esran::service::http::spawn_server;
use esran::service::logs::{AuditRow, ACTIONS_FILE};
use esran::service::{RicService, ServiceConfig};
use esran::sim::{Action, CellReport, KpmSnapshot};
use esran::xapp::{Controller, HybridXapp, XappConfig, RULE_ACTIVATION};
use esran::{baseline, xapp};

fn audit(dir: &Path) -> Vec<AuditRow> {
    csv::Reader::from_path(dir.join(ACTIONS_FILE))
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

/// Cell reports as the controller saw them, keyed by report time.
fn run(kind: ControllerKind, spec: &CampaignSpec, seed: u64, dir: &Path) -> (Vec<AuditRow>, BTreeMap<u64, Vec<CellReport>>) {
    let mut seen = BTreeMap::new();
    let mut observe = |s: &KpmSnapshot| {
        seen.insert(s.timestamp as u64, s.cell_reports.clone());
    };
    let rec = run_single(spec, kind, seed, dir, &mut observe).unwrap();
    assert_eq!(rec.rejected_actions, 0);
    assert_eq!(rec.controller_errors, 0);
    (audit(dir), seen)
}

#[test]
fn hybrid_audit_trail_respects_its_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = CampaignSpec::new(tmp.path());
    spec.duration_s = 1200.0;
    let (rows, seen) = run(ControllerKind::Hybrid, &spec, 2, tmp.path());
    assert!(!rows.is_empty());
    let t_on = spec.xapp.t_on_s;
    let mut last_on: HashMap<&str, f64> = HashMap::new();
    let mut offs_per_round: HashMap<u64, usize> = HashMap::new();
    for r in &rows {
        let t = r.timestamp as u64;
        let cells = seen.get(&t);
        match r.action {
            Action::Off => {
                assert!(!r.cell_id.starts_with("MACRO"), "{r:?}");
                if let Some(&on) = last_on.get(r.cell_id.as_str()) {
                    assert!(r.timestamp - on > t_on, "{r:?} inside protection window");
                }
                *offs_per_round.entry(t).or_default() += 1;
                if let Some(cells) = cells {
                    let c = cells.iter().find(|c| c.cell_id == r.cell_id).unwrap();
                    assert_eq!(c.kind, CellKind::Micro);
                    assert_eq!(c.mode, ModeLabel::Active);
                }
            }
            Action::On => {
                assert_eq!(r.rule, RULE_ACTIVATION);
                last_on.insert(&r.cell_id, r.timestamp);
                if let Some(cells) = cells {
                    assert!(cells.iter().any(|c| c.prb_util_pct >= 100.0 - 1e-7), "on at {t} without a full cell");
                    let c = cells.iter().find(|c| c.cell_id == r.cell_id).unwrap();
                    assert_eq!(c.mode, ModeLabel::Sleeping);
                }
            }
        }
        assert!([xapp::RULE_ACTIVATION, xapp::RULE_IDLE, xapp::RULE_THRESHOLD].contains(&r.rule.as_str()));
    }
    assert!(offs_per_round.values().all(|&n| n == 1));
}

#[test]
fn heuristic_audit_trail_respects_its_rules() {
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = CampaignSpec::new(tmp.path());
    spec.duration_s = 900.0;
    let (rows, seen) = run(ControllerKind::Heuristic, &spec, 3, tmp.path());
    assert!(!rows.is_empty());
    for r in &rows {
        let Some(cells) = seen.get(&(r.timestamp as u64)) else { continue };
        let c = cells.iter().find(|c| c.cell_id == r.cell_id).unwrap();
        assert_eq!(c.kind, CellKind::Micro);
        match r.action {
            Action::Off => {
                assert_eq!(r.rule, baseline::RULE_EMPTY);
                assert_eq!(c.conn_mean, 0.0);
                assert_eq!(c.mode, ModeLabel::Active);
            }
            Action::On => {
                assert_eq!(r.rule, baseline::RULE_HEAVY_MACRO);
                assert_eq!(c.mode, ModeLabel::Sleeping);
                assert!(cells
                    .iter()
                    .any(|m| m.kind == CellKind::Macro && m.prb_util() > spec.baseline.heavy_threshold));
            }
        }
    }
}

#[test]
fn low_traffic_only_ever_adds_sleepers() {
    let tmp = tempfile::tempdir().unwrap();
    let mut sc = default_with_duration(4, 600.0);
    for u in &mut sc.ues {
        u.target_throughput_mbps = 0.2;
    }
    let mut spec = CampaignSpec::new(tmp.path());
    spec.scenario = ScenarioSource::Fixed(sc);
    spec.duration_s = 600.0;
    let mut counts = Vec::new();
    let mut observe = |s: &KpmSnapshot| {
        counts.push(
            s.cell_reports
                .iter()
                .filter(|c| c.mode == ModeLabel::Sleeping)
                .count(),
        );
    };
    run_single(&spec, ControllerKind::Hybrid, 4, tmp.path(), &mut observe).unwrap();
    assert!(counts.windows(2).all(|w| w[1] >= w[0]));
    assert!(*counts.last().unwrap() > 30, "{:?}", counts.last());
}

#[test]
fn hybrid_drives_the_service_over_http() {
    let svc = RicService::new(ServiceConfig::default());
    let server = spawn_server(svc.clone(), "127.0.0.1:0").unwrap();
    let id = svc.start(default_with_duration(9, 300.0), None).unwrap();
    let mut client = HttpRicClient::new(&server.base_url(), Duration::from_secs(10));
    let mut x = HybridXapp::new(XappConfig {
        seed: 9,
        ..Default::default()
    });
    let mut issued = 0;
    for _ in 0..30 {
        let it = x.iterate(&mut client);
        assert!(it.error.is_none(), "{:?}", it.error);
        issued += it.commands.len();
        svc.step(&id, 5).unwrap();
    }
    assert!(issued >= 10);
    assert_eq!(svc.rejected_actions().unwrap(), 0);
    let cells = client.cells().unwrap();
    let sleeping = cells.iter().filter(|c| c.mode == ModeLabel::Sleeping).count();
    assert!(sleeping >= 5, "{sleeping}");
    svc.stop(&id).unwrap();
}
