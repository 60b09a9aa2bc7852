//! KPM report rows, per-tick aggregation and the association checker.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::power::ModeLabel;
use crate::scenario::{CellKind, Scenario};
use crate::wire::{nan_f64, nan_opt_f64};

/// PRB utilisation at or above which a cell counts as heavily loaded.
pub const HEAVY_UTILIZATION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub timestamp: f64,
    pub cell_id: String,
    pub kind: CellKind,
    pub mode: ModeLabel,
    #[serde(with = "nan_f64")]
    pub x: f64,
    #[serde(with = "nan_f64")]
    pub y: f64,
    #[serde(with = "nan_f64")]
    pub prb_util_pct: f64,
    #[serde(with = "nan_f64")]
    pub conn_mean: f64,
    #[serde(with = "nan_f64")]
    pub power_w: f64,
    #[serde(with = "nan_opt_f64", default)]
    pub tx_offset_db: Option<f64>,
}

impl CellReport {
    pub fn prb_util(&self) -> f64 {
        self.prb_util_pct / 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeServingReport {
    pub timestamp: f64,
    pub ue_id: String,
    /// `None` when the UE has no qualifying cell.
    #[serde(default)]
    pub serving_cell_id: Option<String>,
    #[serde(with = "nan_opt_f64", default)]
    pub rsrp_dbm: Option<f64>,
    #[serde(with = "nan_opt_f64", default)]
    pub sinr_db: Option<f64>,
    #[serde(with = "nan_f64")]
    pub dl_throughput_mbps: f64,
    #[serde(with = "nan_f64")]
    pub demand_mbps: f64,
    #[serde(with = "nan_f64")]
    pub x: f64,
    #[serde(with = "nan_f64")]
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeNeighbourReport {
    pub timestamp: f64,
    pub ue_id: String,
    pub neighbour_cell_id: String,
    #[serde(with = "nan_f64")]
    pub rsrp_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct KpmSnapshot {
    pub timestamp: f64,
    pub cell_reports: Vec<CellReport>,
    pub ue_serving_reports: Vec<UeServingReport>,
    pub ue_neighbour_reports: Vec<UeNeighbourReport>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregatedMetrics {
    pub timestamp: f64,
    pub total_power_w: f64,
    pub total_dl_throughput_mbps: f64,
    /// Mean throughput over UEs with non-zero demand.
    pub avg_ue_throughput_mbps: f64,
    pub outage_count: u32,
    pub heavy_macro_count: u32,
    pub heavy_micro_count: u32,
    pub empty_micro_count: u32,
    pub zero_demand_ue_count: u32,
    pub sleeping_micro_count: u32,
    pub detached_ue_count: u32,
}

const OUTAGE_EPS_MBPS: f64 = 1e-9;

/// Reduces one snapshot to network-level counters.
pub fn aggregate(snapshot: &KpmSnapshot) -> AggregatedMetrics {
    let mut m = AggregatedMetrics {
        timestamp: snapshot.timestamp,
        ..Default::default()
    };
    for c in &snapshot.cell_reports {
        m.total_power_w += c.power_w;
        let heavy = c.prb_util() >= HEAVY_UTILIZATION;
        match c.kind {
            CellKind::Macro => m.heavy_macro_count += heavy as u32,
            CellKind::Micro => {
                m.heavy_micro_count += heavy as u32;
                m.empty_micro_count += (c.conn_mean == 0.0) as u32;
                m.sleeping_micro_count += (c.mode == ModeLabel::Sleeping) as u32;
            }
        }
    }
    let mut demanding = 0u32;
    for u in &snapshot.ue_serving_reports {
        m.total_dl_throughput_mbps += u.dl_throughput_mbps;
        if u.serving_cell_id.is_none() {
            m.detached_ue_count += 1;
        }
        if u.demand_mbps > 0.0 {
            demanding += 1;
            if u.dl_throughput_mbps < u.demand_mbps - OUTAGE_EPS_MBPS {
                m.outage_count += 1;
            }
        } else {
            m.zero_demand_ue_count += 1;
        }
    }
    if demanding > 0 {
        m.avg_ue_throughput_mbps = m.total_dl_throughput_mbps / demanding as f64;
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MultipleAssociation { ue_id: String },
    WeakAssociation { ue_id: String, rsrp_dbm: f64 },
    OverCapacity { cell_id: String, attached: u32, capacity: u32 },
    AttachedToSleeping { ue_id: String, cell_id: String },
    UnknownServingCell { ue_id: String, cell_id: String },
    MacroNotActive { cell_id: String },
}

/// Checks single association, the RSRP floor, per-cell capacity, no
/// association to sleeping cells and always-on MACROs on one snapshot.
pub fn check_association_constraints(snapshot: &KpmSnapshot, scenario: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let modes: HashMap<&str, ModeLabel> = snapshot
        .cell_reports
        .iter()
        .map(|c| (c.cell_id.as_str(), c.mode))
        .collect();
    for c in &scenario.cells {
        if c.is_macro() && modes.get(c.cell_id.as_str()) != Some(&ModeLabel::Active) {
            out.push(Violation::MacroNotActive {
                cell_id: c.cell_id.clone(),
            });
        }
    }
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut load: HashMap<&str, u32> = HashMap::new();
    for u in &snapshot.ue_serving_reports {
        if seen.insert(u.ue_id.as_str(), ()).is_some() {
            out.push(Violation::MultipleAssociation { ue_id: u.ue_id.clone() });
        }
        let Some(cell) = u.serving_cell_id.as_deref() else {
            continue;
        };
        *load.entry(cell).or_default() += 1;
        match modes.get(cell) {
            None => out.push(Violation::UnknownServingCell {
                ue_id: u.ue_id.clone(),
                cell_id: cell.to_string(),
            }),
            Some(ModeLabel::Sleeping) => out.push(Violation::AttachedToSleeping {
                ue_id: u.ue_id.clone(),
                cell_id: cell.to_string(),
            }),
            Some(_) => {}
        }
        let rsrp = u.rsrp_dbm.unwrap_or(f64::NEG_INFINITY);
        if !(rsrp >= scenario.rsrp_min_dbm) {
            out.push(Violation::WeakAssociation {
                ue_id: u.ue_id.clone(),
                rsrp_dbm: rsrp,
            });
        }
    }
    for c in &scenario.cells {
        let attached = load.get(c.cell_id.as_str()).copied().unwrap_or(0);
        if attached > c.capacity_max {
            out.push(Violation::OverCapacity {
                cell_id: c.cell_id.clone(),
                attached,
                capacity: c.capacity_max,
            });
        }
    }
    out
}
