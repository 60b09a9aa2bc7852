//! Benchmark heuristic: sleep every empty MICRO, wake a random nearby one
//! when a MACRO runs hot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::power::ModeLabel;
use crate::scenario::{CellKind, Point};
use crate::service::client::RicClient;
use crate::sim::{Action, CellReport};
use crate::xapp::{clean_kpms, issue, report_time, CleanKpms, Controller, Iteration};

pub const RULE_EMPTY: &str = "empty";
pub const RULE_HEAVY_MACRO: &str = "heavy_macro";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    /// MACRO utilisation above which a sleeper is woken.
    pub heavy_threshold: f64,
    pub vicinity_m: f64,
    pub loop_period_s: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            heavy_threshold: 0.9,
            vicinity_m: 300.0,
            loop_period_s: 5.0,
            seed: 0,
        }
    }
}

pub struct BaselineXapp {
    cfg: BaselineConfig,
    rng: ChaCha8Rng,
}

/// Cells switched off and on by one pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BaselineDecision {
    pub off: Vec<String>,
    pub on: Vec<String>,
}

impl BaselineXapp {
    pub fn new(cfg: BaselineConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self { cfg, rng }
    }

    pub fn decide(&mut self, cells: &[CellReport]) -> BaselineDecision {
        let mut sorted: Vec<&CellReport> = cells.iter().collect();
        sorted.sort_by(|a, b| a.cell_id.cmp(&b.cell_id));
        sorted.dedup_by(|a, b| a.cell_id == b.cell_id);
        let mut d = BaselineDecision::default();
        for c in &sorted {
            if c.kind == CellKind::Micro && c.mode == ModeLabel::Active && c.conn_mean == 0.0 {
                d.off.push(c.cell_id.clone());
            }
        }
        for m in sorted
            .iter()
            .filter(|c| c.kind == CellKind::Macro && c.prb_util() > self.cfg.heavy_threshold)
        {
            let centre = Point::new(m.x, m.y);
            let near: Vec<&str> = sorted
                .iter()
                .filter(|c| c.kind == CellKind::Micro && c.mode == ModeLabel::Sleeping)
                .filter(|c| Point::new(c.x, c.y).distance(&centre) <= self.cfg.vicinity_m)
                .map(|c| c.cell_id.as_str())
                .filter(|id| !d.on.iter().any(|o| o == id))
                .collect();
            if !near.is_empty() {
                d.on.push(near[self.rng.random_range(0..near.len())].to_string());
            }
        }
        d
    }

    fn act(&mut self, k: &CleanKpms, client: &mut dyn RicClient, out: &mut Iteration) {
        if report_time(k).is_none() {
            return;
        }
        let d = self.decide(&k.cells);
        for id in &d.on {
            issue(client, out, id, Action::On, RULE_HEAVY_MACRO);
        }
        for id in &d.off {
            issue(client, out, id, Action::Off, RULE_EMPTY);
        }
    }
}

impl Controller for BaselineXapp {
    fn name(&self) -> &'static str {
        "heuristic"
    }

    fn iterate(&mut self, client: &mut dyn RicClient) -> Iteration {
        let mut out = Iteration::default();
        let cells = match client.cells() {
            Ok(c) => c,
            Err(e) => {
                log::warn!("KPM fetch failed, skipping iteration: {e}");
                out.error = Some(e.to_string());
                return out;
            }
        };
        let (k, stats) = clean_kpms(crate::service::client::RawKpms {
            cells,
            ..Default::default()
        });
        out.cleaning = stats;
        self.act(&k, client, &mut out);
        out
    }
}
