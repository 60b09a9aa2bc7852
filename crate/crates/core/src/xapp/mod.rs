//! Hybrid energy-saving xApp: rule-based switch-off, K-Means guided switch-on.

pub mod kmeans;

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::power::ModeLabel;
use crate::scenario::{CellKind, Point};
use crate::service::client::{RawKpms, RicClient};
use crate::service::logs::AuditRow;
use crate::sim::{Action, CellReport, UeNeighbourReport, UeServingReport};
pub use kmeans::{kmeans, ClusterResult, KMeansConfig, KMeansError};

pub const RULE_ACTIVATION: &str = "kmeans_activation";
pub const RULE_IDLE: &str = "idle";
pub const RULE_THRESHOLD: &str = "threshold";

/// Utilisation counted as full; reports are percentages with float noise.
const FULL_UTILIZATION: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XappConfig {
    /// PRB utilisation below which a cell may be emptied.
    pub rho: f64,
    pub rsrp_min_dbm: f64,
    /// Radius around an overloaded cell searched for sleeping cells.
    pub d_max_m: f64,
    /// Protection time after a switch-on.
    pub t_on_s: f64,
    pub loop_period_s: f64,
    pub kmeans: KMeansConfig,
    /// Seed of the idle-cell choice.
    pub seed: u64,
}

impl Default for XappConfig {
    fn default() -> Self {
        Self {
            rho: 0.5,
            rsrp_min_dbm: -110.0,
            d_max_m: 300.0,
            t_on_s: 60.0,
            loop_period_s: 5.0,
            kmeans: KMeansConfig::default(),
            seed: 0,
        }
    }
}

impl XappConfig {
    pub fn validate(&self) -> Result<(), String> {
        let mut errs = Vec::new();
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            errs.push(format!("rho must be in (0, 1], got {}", self.rho));
        }
        if !(self.t_on_s >= 0.0) {
            errs.push(format!("t_on_s must be >= 0, got {}", self.t_on_s));
        }
        if !(self.loop_period_s > 0.0) {
            errs.push(format!("loop_period_s must be > 0, got {}", self.loop_period_s));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs.join("; "))
        }
    }
}

/// Report rows that passed integrity and duplicate checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleanKpms {
    pub cells: Vec<CellReport>,
    pub serving: Vec<UeServingReport>,
    pub neighbours: Vec<UeNeighbourReport>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanStats {
    pub nan_dropped: usize,
    pub duplicates_dropped: usize,
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

fn clean_rows<T, K: std::hash::Hash + Eq>(
    rows: Vec<T>,
    valid: impl Fn(&T) -> bool,
    key: impl Fn(&T) -> K,
    stats: &mut CleanStats,
) -> Vec<T> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        if !valid(&r) {
            stats.nan_dropped += 1;
        } else if !seen.insert(key(&r)) {
            stats.duplicates_dropped += 1;
        } else {
            out.push(r);
        }
    }
    out
}

/// Drops rows with NaN in fields the controllers read and collapses rows
/// repeated for the same entity and timestamp.
pub fn clean_kpms(raw: RawKpms) -> (CleanKpms, CleanStats) {
    let mut stats = CleanStats::default();
    let cells = clean_rows(
        raw.cells,
        |c| finite(c.x) && finite(c.y) && finite(c.prb_util_pct) && finite(c.conn_mean),
        |c| (c.cell_id.clone(), c.timestamp.to_bits()),
        &mut stats,
    );
    let serving = clean_rows(
        raw.serving,
        |u| finite(u.x) && finite(u.y) && finite(u.demand_mbps) && !u.rsrp_dbm.is_some_and(f64::is_nan),
        |u| (u.ue_id.clone(), u.timestamp.to_bits()),
        &mut stats,
    );
    let neighbours = clean_rows(
        raw.neighbours,
        |n| !n.rsrp_dbm.is_nan(),
        |n| (n.ue_id.clone(), n.neighbour_cell_id.clone(), n.timestamp.to_bits()),
        &mut stats,
    );
    (
        CleanKpms {
            cells,
            serving,
            neighbours,
        },
        stats,
    )
}

/// Demand-weighted distance `sum(w_i * |x_i - c|)` in Mbps * m.
pub fn weighted_distance(ues: &[(Point, f64)], cell: Point) -> f64 {
    ues.iter().map(|(p, w)| w * p.distance(&cell)).sum()
}

fn position(c: &CellReport) -> Point {
    Point::new(c.x, c.y)
}

/// Picks the sleeping cell to wake for an overloaded cell.
///
/// The demanding UEs of `overloaded` and the sleeping cells within `d_max_m`
/// are clustered with k equal to the number of sleeping candidates. Each
/// candidate is scored by the weighted distance of the UEs in its cluster;
/// clusters without UEs are skipped. Ties go to the smaller cell id.
pub fn select_activation(
    overloaded: &CellReport,
    ue_rows: &[UeServingReport],
    sleeping: &[CellReport],
    cfg: &XappConfig,
) -> Option<String> {
    let centre = position(overloaded);
    let mut near: Vec<&CellReport> = sleeping
        .iter()
        .filter(|c| c.mode == ModeLabel::Sleeping && c.cell_id != overloaded.cell_id)
        .filter(|c| position(c).distance(&centre) <= cfg.d_max_m)
        .collect();
    if near.is_empty() {
        return None;
    }
    near.sort_by(|a, b| a.cell_id.cmp(&b.cell_id));
    near.dedup_by(|a, b| a.cell_id == b.cell_id);
    let ues: Vec<(Point, f64)> = ue_rows
        .iter()
        .filter(|u| u.serving_cell_id.as_deref() == Some(overloaded.cell_id.as_str()) && u.demand_mbps > 0.0)
        .map(|u| (Point::new(u.x, u.y), u.demand_mbps))
        .collect();
    if ues.is_empty() {
        return None;
    }
    let mut points: Vec<Point> = ues.iter().map(|u| u.0).collect();
    points.extend(near.iter().map(|c| position(c)));
    let clusters = kmeans(&points, near.len(), &cfg.kmeans).expect("k never exceeds the point count");
    let n_ues = ues.len();
    let mut best: Option<(f64, &str)> = None;
    for (j, cell) in near.iter().enumerate() {
        let cluster = clusters.assignments[n_ues + j];
        let members: Vec<(Point, f64)> = ues
            .iter()
            .zip(&clusters.assignments)
            .filter(|(_, &a)| a == cluster)
            .map(|(u, _)| *u)
            .collect();
        if members.is_empty() {
            continue;
        }
        let d = weighted_distance(&members, position(cell));
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, cell.cell_id.as_str()));
        }
    }
    best.map(|(_, id)| id.to_string())
}

fn protected(cell_id: &str, now: f64, last_on_at: &HashMap<String, f64>, t_on: f64) -> bool {
    last_on_at.get(cell_id).is_some_and(|&t| now - t <= t_on)
}

/// Active MICROs with no connected UEs over the window, outside their
/// protection time, in cell id order.
pub fn select_idle_shutdowns(
    cells: &[CellReport],
    now: f64,
    last_on_at: &HashMap<String, f64>,
    cfg: &XappConfig,
) -> Vec<String> {
    let mut out: Vec<String> = cells
        .iter()
        .filter(|c| c.kind == CellKind::Micro && c.mode == ModeLabel::Active && c.conn_mean == 0.0)
        .filter(|c| !protected(&c.cell_id, now, last_on_at, cfg.t_on_s))
        .map(|c| c.cell_id.clone())
        .collect();
    out.sort();
    out.dedup();
    out
}

/// First lightly loaded Active MICRO, by ascending utilisation, whose every
/// UE sees another Active, lightly loaded cell above the RSRP floor.
pub fn select_threshold_shutdown(
    cells: &[CellReport],
    serving: &[UeServingReport],
    neighbours: &[UeNeighbourReport],
    now: f64,
    last_on_at: &HashMap<String, f64>,
    cfg: &XappConfig,
) -> Option<String> {
    let light: HashMap<&str, &CellReport> = cells
        .iter()
        .filter(|c| c.mode == ModeLabel::Active && c.prb_util() < cfg.rho)
        .map(|c| (c.cell_id.as_str(), c))
        .collect();
    let mut candidates: Vec<&CellReport> = light
        .values()
        .copied()
        .filter(|c| c.kind == CellKind::Micro && !protected(&c.cell_id, now, last_on_at, cfg.t_on_s))
        .collect();
    candidates.sort_by(|a, b| a.prb_util_pct.total_cmp(&b.prb_util_pct).then(a.cell_id.cmp(&b.cell_id)));
    let mut by_ue: HashMap<&str, Vec<&UeNeighbourReport>> = HashMap::new();
    for n in neighbours {
        by_ue.entry(n.ue_id.as_str()).or_default().push(n);
    }
    let mut served: HashMap<&str, Vec<&str>> = HashMap::new();
    for u in serving {
        if let Some(c) = u.serving_cell_id.as_deref() {
            served.entry(c).or_default().push(u.ue_id.as_str());
        }
    }
    candidates
        .into_iter()
        .find(|cell| {
            served.get(cell.cell_id.as_str()).into_iter().flatten().all(|ue| {
                by_ue.get(ue).into_iter().flatten().any(|n| {
                    n.neighbour_cell_id != cell.cell_id
                        && n.rsrp_dbm > cfg.rsrp_min_dbm
                        && light.contains_key(n.neighbour_cell_id.as_str())
                })
            })
        })
        .map(|c| c.cell_id.clone())
}

/// Outcome of one control-loop pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Iteration {
    pub commands: Vec<AuditRow>,
    pub cleaning: CleanStats,
    /// Transport or rejection error that cut the pass short.
    pub error: Option<String>,
}

/// A periodic controller driving a [`RicClient`].
pub trait Controller {
    fn name(&self) -> &'static str;
    fn iterate(&mut self, client: &mut dyn RicClient) -> Iteration;
}

/// Latest report timestamp, the controller's notion of now.
pub(crate) fn report_time(k: &CleanKpms) -> Option<f64> {
    k.cells.iter().map(|c| c.timestamp).reduce(f64::max)
}

pub(crate) fn issue(
    client: &mut dyn RicClient,
    out: &mut Iteration,
    cell_id: &str,
    action: Action,
    rule: &str,
) -> bool {
    match client.post_action(cell_id, action) {
        Ok(ack) => {
            out.commands.push(AuditRow {
                timestamp: ack.issued_at,
                cell_id: cell_id.to_string(),
                action,
                rule: rule.to_string(),
            });
            true
        }
        Err(e) => {
            log::warn!("{} {cell_id} failed: {e}", action.as_str());
            out.error = Some(e.to_string());
            false
        }
    }
}

pub struct HybridXapp {
    cfg: XappConfig,
    last_on_at: HashMap<String, f64>,
    rng: ChaCha8Rng,
}

impl HybridXapp {
    pub fn new(cfg: XappConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self {
            cfg,
            last_on_at: HashMap::new(),
            rng,
        }
    }

    pub fn config(&self) -> &XappConfig {
        &self.cfg
    }

    pub fn last_on_at(&self) -> &HashMap<String, f64> {
        &self.last_on_at
    }

    /// One pass over already cleaned reports.
    pub fn decide(&mut self, k: &CleanKpms, client: &mut dyn RicClient, out: &mut Iteration) {
        let Some(now) = report_time(k) else {
            return;
        };
        let sleeping: Vec<CellReport> = k
            .cells
            .iter()
            .filter(|c| c.mode == ModeLabel::Sleeping)
            .cloned()
            .collect();
        let mut overloaded: Vec<&CellReport> = k.cells.iter().filter(|c| c.prb_util() >= FULL_UTILIZATION).collect();
        overloaded.sort_by(|a, b| a.cell_id.cmp(&b.cell_id));
        let mut woken: HashSet<String> = HashSet::new();
        for cell in overloaded {
            let remaining: Vec<CellReport> = sleeping
                .iter()
                .filter(|c| !woken.contains(&c.cell_id))
                .cloned()
                .collect();
            if let Some(id) = select_activation(cell, &k.serving, &remaining, &self.cfg) {
                if issue(client, out, &id, Action::On, RULE_ACTIVATION) {
                    self.last_on_at.insert(id.clone(), now);
                    woken.insert(id);
                }
            }
        }

        let idle = select_idle_shutdowns(&k.cells, now, &self.last_on_at, &self.cfg);
        if !idle.is_empty() {
            let pick = &idle[self.rng.random_range(0..idle.len())];
            issue(client, out, pick, Action::Off, RULE_IDLE);
        } else if let Some(id) =
            select_threshold_shutdown(&k.cells, &k.serving, &k.neighbours, now, &self.last_on_at, &self.cfg)
        {
            issue(client, out, &id, Action::Off, RULE_THRESHOLD);
        }
    }
}

impl Controller for HybridXapp {
    fn name(&self) -> &'static str {
        "hybrid"
    }

    fn iterate(&mut self, client: &mut dyn RicClient) -> Iteration {
        let mut out = Iteration::default();
        let raw = match client.fetch() {
            Ok(r) => r,
            Err(e) => {
                log::warn!("KPM fetch failed, skipping iteration: {e}");
                out.error = Some(e.to_string());
                return out;
            }
        };
        let (k, stats) = clean_kpms(raw);
        out.cleaning = stats;
        self.decide(&k, client, &mut out);
        out
    }
}
