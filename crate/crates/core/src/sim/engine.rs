use std::collections::{HashMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attach::{attach_ues, AttachInput};
use super::kpm::{CellReport, KpmSnapshot, UeNeighbourReport, UeServingReport};
use super::{Action, ActionCommand};
use crate::mobility::{step_mobility, step_traffic, UeState};
use crate::power::{cell_power, step_mode, CellMode};
use crate::radio::{
    self, allocate_prbs, dbm_to_mw, decorrelation_distance_m, LinkGeometry, LinkShadow, PrbRequest,
};
use crate::scenario::{InterferenceModel, Scenario, ScenarioError};

// Distinct streams derived from the scenario seed.
const STREAM_UE: u64 = 1;
const STREAM_SHADOW: u64 = 2;

/// An action the simulator refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub timestamp: f64,
    pub cell_id: String,
    pub action: Action,
    pub reason: String,
}

#[derive(Debug, Clone)]
struct CellRuntime {
    mode: CellMode,
    utilization: f64,
    prev_utilization: f64,
    attached: u32,
    conn_window: VecDeque<u32>,
    power_w: f64,
}

/// The network digital twin. Owns all state and advances one tick at a time.
pub struct Simulation {
    scenario: Scenario,
    cells: Vec<CellRuntime>,
    ues: Vec<UeState>,
    ue_sinr_db: Vec<Option<f64>>,
    shadows: Vec<LinkShadow>,
    /// Path loss per link, UE-major.
    path_loss: Vec<f64>,
    per_re_offset_db: Vec<f64>,
    prbs: Vec<u32>,
    noise_mw: Vec<f64>,
    co_channel: Vec<Vec<usize>>,
    cell_index: HashMap<String, usize>,
    ue_rng: ChaCha8Rng,
    shadow_rng: ChaCha8Rng,
    time: f64,
    ticks: u64,
    rejections: Vec<Rejection>,
    rejected_total: u64,
    latest: KpmSnapshot,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, ScenarioError> {
        scenario.validate()?;
        let n_cells = scenario.cells.len();
        let mut ue_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        ue_rng.set_stream(STREAM_UE);
        let mut shadow_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        shadow_rng.set_stream(STREAM_SHADOW);

        let ues: Vec<UeState> = scenario
            .ues
            .iter()
            .map(|u| UeState::initial(u, &scenario.area, &mut ue_rng))
            .collect();
        let shadows: Vec<LinkShadow> = (0..ues.len() * n_cells)
            .map(|_| LinkShadow::new(&mut shadow_rng, scenario.radio.shadowing))
            .collect();
        let per_re_offset_db = scenario
            .cells
            .iter()
            .map(|c| radio::per_re_offset_db(c.bandwidth_mhz))
            .collect();
        let prbs = scenario.cells.iter().map(|c| radio::prb_count(c.bandwidth_mhz)).collect();
        let noise_mw = scenario
            .cells
            .iter()
            .map(|c| dbm_to_mw(radio::noise_per_re_dbm(c.bandwidth_mhz, scenario.radio.noise_figure_db)))
            .collect();
        let co_channel = scenario
            .cells
            .iter()
            .enumerate()
            .map(|(i, a)| {
                scenario
                    .cells
                    .iter()
                    .enumerate()
                    .filter(|(j, b)| *j != i && b.center_freq_mhz == a.center_freq_mhz)
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let cell_index = scenario
            .cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.cell_id.clone(), i))
            .collect();
        let cells = vec![
            CellRuntime {
                mode: CellMode::active(),
                utilization: 0.0,
                prev_utilization: 0.0,
                attached: 0,
                conn_window: VecDeque::new(),
                power_w: 0.0,
            };
            n_cells
        ];
        let n_ues = ues.len();
        let mut sim = Self {
            scenario,
            cells,
            ues,
            ue_sinr_db: vec![None; n_ues],
            shadows,
            path_loss: vec![0.0; n_ues * n_cells],
            per_re_offset_db,
            prbs,
            noise_mw,
            co_channel,
            cell_index,
            ue_rng,
            shadow_rng,
            time: 0.0,
            ticks: 0,
            rejections: Vec::new(),
            rejected_total: 0,
            latest: KpmSnapshot::default(),
        };
        for u in 0..n_ues {
            sim.refresh_path_loss(u);
        }
        sim.latest = sim.evaluate();
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn finished(&self) -> bool {
        self.ticks >= self.scenario.tick_count()
    }

    /// Snapshot of the most recent tick (t = 0 before the first tick).
    pub fn latest(&self) -> &KpmSnapshot {
        &self.latest
    }

    pub fn cell_id_index(&self, id: &str) -> Option<usize> {
        self.cell_index.get(id).copied()
    }

    pub fn cell_mode(&self, idx: usize) -> CellMode {
        self.cells[idx].mode
    }

    pub fn rejected_total(&self) -> u64 {
        self.rejected_total
    }

    pub fn take_rejections(&mut self) -> Vec<Rejection> {
        std::mem::take(&mut self.rejections)
    }

    /// Applies `actions`, advances one tick and returns the new snapshot.
    pub fn tick(&mut self, actions: &[ActionCommand]) -> &KpmSnapshot {
        let dt = self.scenario.tick_s;
        for a in actions {
            self.apply_action(a);
        }
        for (i, cfg) in self.scenario.cells.iter().enumerate() {
            let rt = &mut self.cells[i];
            // MACROs never ramp, so this cannot fail.
            rt.mode = step_mode(cfg, rt.mode, dt, rt.attached > 0).expect("MACRO cells never ramp");
        }
        self.ticks += 1;
        self.time = self.ticks as f64 * dt;

        let area = self.scenario.area;
        for u in 0..self.ues.len() {
            let cfg = &self.scenario.ues[u];
            let moved = step_mobility(cfg, &mut self.ues[u], &area, dt, &mut self.ue_rng);
            step_traffic(cfg, &mut self.ues[u], dt, &mut self.ue_rng);
            if moved > 0.0 {
                if self.scenario.radio.shadowing {
                    let n = self.scenario.cells.len();
                    for (c, cell) in self.scenario.cells.iter().enumerate() {
                        let d = decorrelation_distance_m(cell.channel_model);
                        self.shadows[u * n + c].advance(&mut self.shadow_rng, moved, d);
                    }
                }
                self.refresh_path_loss(u);
            }
        }
        self.latest = self.evaluate();
        &self.latest
    }

    fn apply_action(&mut self, a: &ActionCommand) {
        let Some(&idx) = self.cell_index.get(&a.cell_id) else {
            self.reject(a, "unknown cell");
            return;
        };
        let cfg = &self.scenario.cells[idx];
        let rt = &mut self.cells[idx];
        match a.action {
            Action::On => rt.mode = rt.mode.switch_on(self.time),
            Action::Off => match rt.mode.switch_off(cfg) {
                Ok(m) => rt.mode = m,
                Err(e) => {
                    let reason = e.to_string();
                    self.reject(a, &reason);
                }
            },
        }
    }

    fn reject(&mut self, a: &ActionCommand, reason: &str) {
        log::warn!("rejected {} for {}: {reason}", a.action.as_str(), a.cell_id);
        self.rejected_total += 1;
        self.rejections.push(Rejection {
            timestamp: self.time,
            cell_id: a.cell_id.clone(),
            action: a.action,
            reason: reason.to_string(),
        });
    }

    fn refresh_path_loss(&mut self, u: usize) {
        let n = self.scenario.cells.len();
        let ue_cfg = &self.scenario.ues[u];
        let pos = self.ues[u].position;
        for (c, cell) in self.scenario.cells.iter().enumerate() {
            let geom = LinkGeometry {
                d2d_m: pos.distance(&cell.position),
                h_bs_m: cell.antenna_height_m,
                h_ut_m: ue_cfg.height_m,
            };
            self.path_loss[u * n + c] = radio::path_loss(
                cell.channel_model,
                &geom,
                cell.center_freq_mhz / 1000.0,
                ue_cfg.is_indoor(),
                &self.shadows[u * n + c].draws,
            )
            .expect("frequencies validated with the scenario");
        }
    }

    /// RSRP the UE would see from the cell at nominal power.
    fn nominal_rsrp(&self, u: usize, c: usize) -> f64 {
        let n = self.scenario.cells.len();
        self.scenario.cells[c].tx_power_dbm - self.per_re_offset_db[c] - self.path_loss[u * n + c]
    }

    /// Attachment, scheduling, power and report generation for the current state.
    fn evaluate(&mut self) -> KpmSnapshot {
        let n_cells = self.scenario.cells.len();
        let n_ues = self.ues.len();
        let offsets: Vec<f64> = self
            .scenario
            .cells
            .iter()
            .zip(&self.cells)
            .map(|(cfg, rt)| rt.mode.tx_offset_db(cfg))
            .collect();
        let mut rsrp = vec![f64::NEG_INFINITY; n_ues * n_cells];
        for u in 0..n_ues {
            for c in 0..n_cells {
                if offsets[c] != f64::NEG_INFINITY {
                    rsrp[u * n_cells + c] = self.nominal_rsrp(u, c) + offsets[c];
                }
            }
        }

        let accepting: Vec<bool> = self.cells.iter().map(|rt| rt.mode.is_active()).collect();
        let capacity: Vec<u32> = self.scenario.cells.iter().map(|c| c.capacity_max).collect();
        let serving: Vec<Option<usize>> = self.ues.iter().map(|u| u.serving_cell).collect();
        let serving = attach_ues(
            &AttachInput {
                rsrp: &rsrp,
                n_cells,
                accepting: &accepting,
                capacity: &capacity,
                rsrp_min_dbm: self.scenario.rsrp_min_dbm,
                hysteresis_db: self.scenario.radio.handover_hysteresis_db,
            },
            &serving,
        );
        for rt in &mut self.cells {
            rt.attached = 0;
        }
        for (ue, s) in self.ues.iter_mut().zip(&serving) {
            ue.serving_cell = *s;
            if let Some(c) = s {
                self.cells[*c].attached += 1;
            }
        }

        // Link rates for every attached UE.
        let activity: Vec<f64> = self
            .cells
            .iter()
            .map(|rt| match self.scenario.radio.interference {
                InterferenceModel::FullBuffer => 1.0,
                InterferenceModel::LoadWeighted => rt.prev_utilization,
            })
            .collect();
        let rate_params = radio::RateParams {
            noise_figure_db: self.scenario.radio.noise_figure_db,
            se_cap: self.scenario.radio.se_cap,
        };
        let mut rate = vec![0.0; n_ues];
        for u in 0..n_ues {
            self.ue_sinr_db[u] = None;
            let Some(s) = serving[u] else { continue };
            let row = &rsrp[u * n_cells..(u + 1) * n_cells];
            let interference_mw: f64 = self.co_channel[s]
                .iter()
                .filter(|&&c| row[c] != f64::NEG_INFINITY && activity[c] > 0.0)
                .map(|&c| activity[c] * dbm_to_mw(row[c]))
                .sum();
            let sinr = dbm_to_mw(row[s]) / (interference_mw + self.noise_mw[s]);
            let se = (1.0 + sinr).log2().min(rate_params.se_cap);
            rate[u] = se * radio::SUBCARRIER_SPACING_HZ * radio::SUBCARRIERS_PER_PRB as f64 / 1.0e6;
            self.ue_sinr_db[u] = Some(10.0 * sinr.log10());
        }

        // Scheduling per cell.
        let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); n_cells];
        for (u, s) in serving.iter().enumerate() {
            if let Some(c) = s {
                if self.ues[u].demanded_throughput_mbps > 0.0 {
                    per_cell[*c].push(u);
                }
            }
        }
        for ue in &mut self.ues {
            ue.achieved_throughput_mbps = 0.0;
        }
        for (c, members) in per_cell.iter().enumerate() {
            let rt = &mut self.cells[c];
            rt.prev_utilization = rt.utilization;
            if members.is_empty() {
                rt.utilization = 0.0;
                continue;
            }
            let requests: Vec<PrbRequest<'_>> = members
                .iter()
                .map(|&u| PrbRequest {
                    ue_id: &self.scenario.ues[u].ue_id,
                    demand_mbps: self.ues[u].demanded_throughput_mbps,
                    rate_per_prb_mbps: rate[u],
                })
                .collect();
            let alloc = allocate_prbs(self.prbs[c], &requests);
            for (&u, &count) in members.iter().zip(&alloc.counts) {
                let ue = &mut self.ues[u];
                ue.achieved_throughput_mbps = (count as f64 * rate[u]).min(ue.demanded_throughput_mbps);
            }
            rt.utilization = alloc.utilization();
        }

        let idle_fraction = self.scenario.power.idle_fraction;
        let window = self.scenario.kpm.window_ticks;
        for (cfg, rt) in self.scenario.cells.iter().zip(&mut self.cells) {
            if rt.mode.is_sleeping() {
                rt.utilization = 0.0;
            }
            rt.power_w = cell_power(cfg, &rt.mode, rt.utilization, idle_fraction);
            rt.conn_window.push_back(rt.attached);
            while rt.conn_window.len() > window {
                rt.conn_window.pop_front();
            }
        }
        self.build_snapshot(&rsrp)
    }

    fn build_snapshot(&self, rsrp: &[f64]) -> KpmSnapshot {
        let ts = self.time;
        let n_cells = self.scenario.cells.len();
        let cell_reports = self
            .scenario
            .cells
            .iter()
            .zip(&self.cells)
            .map(|(cfg, rt)| {
                let offset = rt.mode.tx_offset_db(cfg);
                CellReport {
                    timestamp: ts,
                    cell_id: cfg.cell_id.clone(),
                    kind: cfg.kind,
                    mode: rt.mode.mode.label(),
                    x: cfg.position.x,
                    y: cfg.position.y,
                    prb_util_pct: rt.utilization * 100.0,
                    conn_mean: rt.conn_window.iter().sum::<u32>() as f64 / rt.conn_window.len() as f64,
                    power_w: rt.power_w,
                    tx_offset_db: offset.is_finite().then_some(offset),
                }
            })
            .collect();

        let mut serving_reports = Vec::with_capacity(self.ues.len());
        let full = self.scenario.kpm.full_measurement;
        let limit = if full { None } else { self.scenario.kpm.neighbour_report_limit };
        let mut neighbour_reports = Vec::new();
        let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n_cells);
        for (u, (cfg, ue)) in self.scenario.ues.iter().zip(&self.ues).enumerate() {
            let row = &rsrp[u * n_cells..(u + 1) * n_cells];
            serving_reports.push(UeServingReport {
                timestamp: ts,
                ue_id: cfg.ue_id.clone(),
                serving_cell_id: ue.serving_cell.map(|c| self.scenario.cells[c].cell_id.clone()),
                rsrp_dbm: ue.serving_cell.map(|c| row[c]),
                sinr_db: self.ue_sinr_db[u],
                dl_throughput_mbps: ue.achieved_throughput_mbps,
                demand_mbps: ue.demanded_throughput_mbps,
                x: ue.position.x,
                y: ue.position.y,
            });

            candidates.clear();
            for c in 0..n_cells {
                if Some(c) == ue.serving_cell {
                    continue;
                }
                if row[c] != f64::NEG_INFINITY {
                    candidates.push((row[c], c));
                } else if full {
                    candidates.push((self.nominal_rsrp(u, c), c));
                }
            }
            let by_strength = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            if let Some(k) = limit {
                if candidates.len() > k && k > 0 {
                    candidates.select_nth_unstable_by(k - 1, by_strength);
                }
                candidates.truncate(k);
            }
            candidates.sort_by(by_strength);
            for &(r, c) in &candidates {
                neighbour_reports.push(UeNeighbourReport {
                    timestamp: ts,
                    ue_id: cfg.ue_id.clone(),
                    neighbour_cell_id: self.scenario.cells[c].cell_id.clone(),
                    rsrp_dbm: r,
                });
            }
        }
        KpmSnapshot {
            timestamp: ts,
            cell_reports,
            ue_serving_reports: serving_reports,
            ue_neighbour_reports: neighbour_reports,
        }
    }
}
