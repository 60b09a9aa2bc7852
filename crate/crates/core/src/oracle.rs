//! Exact optimum of the MICRO on/off problem on small frozen instances.
//!
//! The problem: switch off as many MICROs as possible while every UE can be
//! associated with exactly one switched-on RU that it hears at or above
//! `r_min_dbm`, no RU serving more than `c_max` UEs, MACROs always on.
//! Off-sets are enumerated from the largest size downward and each one is
//! checked with a capacitated bipartite matching.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::scenario::{CellKind, Scenario};
use crate::sim::KpmSnapshot;

pub const MAX_MICROS: usize = 20;
pub const MAX_UES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub demand_mbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticInstance {
    pub macros: Vec<RuSpec>,
    pub micros: Vec<RuSpec>,
    pub ues: Vec<UeSpec>,
    /// Signal per UE (rows) and RU (columns, MACROs then MICROs); `null`
    /// means the RU is not heard at all.
    pub r_dbm: Vec<Vec<Option<f64>>>,
    pub r_min_dbm: f64,
    pub c_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Number of MICROs switched off.
    pub z_star: usize,
    /// On/off state per MICRO, in instance order.
    pub micro_on: Vec<bool>,
    /// Serving RU index (MACROs then MICROs) per UE.
    pub alpha: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("instance too large: {micros} MICROs (max {MAX_MICROS}), {ues} UEs (max {MAX_UES})")]
    TooLarge { micros: usize, ues: usize },
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("infeasible even with every RU on; uncoverable UEs: {}", .0.join(", "))]
    Infeasible(Vec<String>),
    #[error("missing measurements for {} UE/cell pairs: {}", .0.len(), fmt_pairs(.0))]
    MissingMeasurements(Vec<(String, String)>),
}

fn fmt_pairs(p: &[(String, String)]) -> String {
    p.iter()
        .take(10)
        .map(|(u, c)| format!("{u}/{c}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl StaticInstance {
    pub fn n_rus(&self) -> usize {
        self.macros.len() + self.micros.len()
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.micros.len() > MAX_MICROS || self.ues.len() > MAX_UES {
            return Err(OracleError::TooLarge {
                micros: self.micros.len(),
                ues: self.ues.len(),
            });
        }
        if self.r_dbm.len() != self.ues.len() {
            return Err(OracleError::Malformed(format!(
                "{} signal rows for {} UEs",
                self.r_dbm.len(),
                self.ues.len()
            )));
        }
        if let Some((i, _)) = self.r_dbm.iter().enumerate().find(|(_, r)| r.len() != self.n_rus()) {
            return Err(OracleError::Malformed(format!(
                "signal row {i} does not have {} entries",
                self.n_rus()
            )));
        }
        let mut ids = HashSet::new();
        for ru in self.macros.iter().chain(&self.micros) {
            if !ids.insert(ru.id.as_str()) {
                return Err(OracleError::Malformed(format!("RU {} listed twice", ru.id)));
            }
        }
        let mut ue_ids = HashSet::new();
        for u in &self.ues {
            if !ue_ids.insert(u.id.as_str()) {
                return Err(OracleError::Malformed(format!("UE {} listed twice", u.id)));
            }
        }
        Ok(())
    }

    fn qualifying(&self) -> Vec<Vec<usize>> {
        self.r_dbm
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, r)| r.is_some_and(|v| v >= self.r_min_dbm))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    }
}

/// Capacitated bipartite matching of UEs onto switched-on RUs by
/// augmenting paths. Equivalent to a plain matching against `c_max`
/// copies of every RU. Returns the RU per UE if all UEs fit.
fn assign_all(qual: &[Vec<usize>], on: &[bool], c_max: u32) -> Option<Vec<usize>> {
    let n_rus = on.len();
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n_rus];
    let mut alpha = vec![usize::MAX; qual.len()];

    fn augment(
        u: usize,
        qual: &[Vec<usize>],
        on: &[bool],
        cap: usize,
        holders: &mut [Vec<usize>],
        alpha: &mut [usize],
        seen: &mut [bool],
    ) -> bool {
        for &r in &qual[u] {
            if !on[r] || seen[r] {
                continue;
            }
            seen[r] = true;
            if holders[r].len() < cap {
                holders[r].push(u);
                alpha[u] = r;
                return true;
            }
            for i in 0..holders[r].len() {
                let v = holders[r][i];
                if augment(v, qual, on, cap, holders, alpha, seen) {
                    holders[r][i] = u;
                    alpha[u] = r;
                    return true;
                }
            }
        }
        false
    }

    let cap = c_max as usize;
    for u in 0..qual.len() {
        let mut seen = vec![false; n_rus];
        if !augment(u, qual, on, cap, &mut holders, &mut alpha, &mut seen) {
            return None;
        }
    }
    Some(alpha)
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Maximum number of MICROs that can be off, with a witness.
pub fn solve_exact(inst: &StaticInstance) -> Result<Solution, OracleError> {
    inst.validate()?;
    let qual = inst.qualifying();
    let n_macro = inst.macros.len();
    let m = inst.micros.len();
    let mut on = vec![true; inst.n_rus()];
    if assign_all(&qual, &on, inst.c_max).is_none() {
        let uncoverable: Vec<String> = inst
            .ues
            .iter()
            .zip(&qual)
            .filter(|(_, q)| q.is_empty())
            .map(|(u, _)| u.id.clone())
            .collect();
        return Err(OracleError::Infeasible(if uncoverable.is_empty() {
            vec!["(capacity exhausted)".to_string()]
        } else {
            uncoverable
        }));
    }
    for z in (0..=m).rev() {
        let mut off: Vec<usize> = (0..z).collect();
        loop {
            on.iter_mut().for_each(|o| *o = true);
            for &i in &off {
                on[n_macro + i] = false;
            }
            if let Some(alpha) = assign_all(&qual, &on, inst.c_max) {
                return Ok(Solution {
                    z_star: z,
                    micro_on: on[n_macro..].to_vec(),
                    alpha,
                });
            }
            if z == 0 || !next_combination(&mut off, m) {
                break;
            }
        }
    }
    unreachable!("the all-on configuration was feasible")
}

/// Independent constraint check of a claimed solution.
pub fn check_solution(inst: &StaticInstance, sol: &Solution) -> Vec<String> {
    let mut errs = Vec::new();
    let n_macro = inst.macros.len();
    if sol.micro_on.len() != inst.micros.len() {
        errs.push("micro_on has the wrong length".into());
        return errs;
    }
    if sol.alpha.len() != inst.ues.len() {
        errs.push("alpha has the wrong length".into());
        return errs;
    }
    let off = sol.micro_on.iter().filter(|o| !**o).count();
    if off != sol.z_star {
        errs.push(format!("z_star {} but {off} MICROs off", sol.z_star));
    }
    let mut load = vec![0u32; inst.n_rus()];
    for (u, &r) in sol.alpha.iter().enumerate() {
        let ue = &inst.ues[u].id;
        if r >= inst.n_rus() {
            errs.push(format!("{ue} assigned to unknown RU {r}"));
            continue;
        }
        load[r] += 1;
        if r >= n_macro && !sol.micro_on[r - n_macro] {
            errs.push(format!("{ue} served by switched-off RU {r}"));
        }
        match inst.r_dbm[u][r] {
            Some(v) if v >= inst.r_min_dbm => {}
            other => errs.push(format!("{ue} below the signal floor on RU {r}: {other:?}")),
        }
    }
    for (r, &l) in load.iter().enumerate() {
        if l > inst.c_max {
            errs.push(format!("RU {r} serves {l} > {}", inst.c_max));
        }
    }
    errs
}

/// Freezes one tick: demanding attached UEs and their reported signals.
///
/// Needs a full-measurement snapshot so every UE/cell pair is reported.
pub fn snapshot_to_instance(snapshot: &KpmSnapshot, scenario: &Scenario) -> Result<StaticInstance, OracleError> {
    let spec = |c: &crate::scenario::CellConfig| RuSpec {
        id: c.cell_id.clone(),
        x: c.position.x,
        y: c.position.y,
    };
    let macros: Vec<RuSpec> = scenario.cells.iter().filter(|c| c.kind == CellKind::Macro).map(spec).collect();
    let micros: Vec<RuSpec> = scenario.cells.iter().filter(|c| c.kind == CellKind::Micro).map(spec).collect();
    let mut neighbour: HashMap<(&str, &str), f64> = HashMap::new();
    for n in &snapshot.ue_neighbour_reports {
        neighbour.insert((n.ue_id.as_str(), n.neighbour_cell_id.as_str()), n.rsrp_dbm);
    }
    let mut ues = Vec::new();
    let mut r_dbm = Vec::new();
    let mut missing = Vec::new();
    for u in &snapshot.ue_serving_reports {
        let Some(serving) = u.serving_cell_id.as_deref() else {
            continue;
        };
        if u.demand_mbps <= 0.0 {
            continue;
        }
        let row: Vec<Option<f64>> = macros
            .iter()
            .chain(&micros)
            .map(|ru| {
                let v = if ru.id == serving {
                    u.rsrp_dbm
                } else {
                    neighbour.get(&(u.ue_id.as_str(), ru.id.as_str())).copied()
                };
                if v.is_none() {
                    missing.push((u.ue_id.clone(), ru.id.clone()));
                }
                v
            })
            .collect();
        ues.push(UeSpec {
            id: u.ue_id.clone(),
            x: u.x,
            y: u.y,
            demand_mbps: u.demand_mbps,
        });
        r_dbm.push(row);
    }
    if !missing.is_empty() {
        return Err(OracleError::MissingMeasurements(missing));
    }
    let c_max = scenario.cells.iter().map(|c| c.capacity_max).min().unwrap_or(0);
    Ok(StaticInstance {
        macros,
        micros,
        ues,
        r_dbm,
        r_min_dbm: scenario.rsrp_min_dbm,
        c_max,
    })
}
