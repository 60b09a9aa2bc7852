//! Query-path corruption: NaN-marked fields and duplicated rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{CellReport, UeNeighbourReport, UeServingReport};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultProfile {
    pub nan_probability: f64,
    pub duplicate_probability: f64,
    pub seed: u64,
}

impl FaultProfile {
    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [
            ("nan_probability", self.nan_probability),
            ("duplicate_probability", self.duplicate_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.nan_probability == 0.0 && self.duplicate_probability == 0.0
    }
}

/// Rows whose numeric fields can be NaN-marked. The timestamp and
/// identifiers are never touched.
pub trait Corrupt {
    fn corrupt(&mut self, p: f64, rng: &mut ChaCha8Rng);
}

fn hit(v: &mut f64, p: f64, rng: &mut ChaCha8Rng) {
    if rng.random::<f64>() < p {
        *v = f64::NAN;
    }
}

fn hit_opt(v: &mut Option<f64>, p: f64, rng: &mut ChaCha8Rng) {
    if rng.random::<f64>() < p {
        *v = Some(f64::NAN);
    }
}

impl Corrupt for CellReport {
    fn corrupt(&mut self, p: f64, rng: &mut ChaCha8Rng) {
        hit(&mut self.x, p, rng);
        hit(&mut self.y, p, rng);
        hit(&mut self.prb_util_pct, p, rng);
        hit(&mut self.conn_mean, p, rng);
        hit(&mut self.power_w, p, rng);
        hit_opt(&mut self.tx_offset_db, p, rng);
    }
}

impl Corrupt for UeServingReport {
    fn corrupt(&mut self, p: f64, rng: &mut ChaCha8Rng) {
        hit_opt(&mut self.rsrp_dbm, p, rng);
        hit_opt(&mut self.sinr_db, p, rng);
        hit(&mut self.dl_throughput_mbps, p, rng);
        hit(&mut self.demand_mbps, p, rng);
        hit(&mut self.x, p, rng);
        hit(&mut self.y, p, rng);
    }
}

impl Corrupt for UeNeighbourReport {
    fn corrupt(&mut self, p: f64, rng: &mut ChaCha8Rng) {
        hit(&mut self.rsrp_dbm, p, rng);
    }
}

pub struct FaultInjector {
    profile: FaultProfile,
    rng: ChaCha8Rng,
}

impl FaultInjector {
    pub fn new(profile: FaultProfile) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(profile.seed);
        Self { profile, rng }
    }

    pub fn profile(&self) -> &FaultProfile {
        &self.profile
    }

    pub fn apply<T: Corrupt + Clone>(&mut self, rows: Vec<T>) -> Vec<T> {
        if self.profile.is_zero() {
            return rows;
        }
        let mut out = Vec::with_capacity(rows.len());
        for mut row in rows {
            if self.profile.nan_probability > 0.0 {
                row.corrupt(self.profile.nan_probability, &mut self.rng);
            }
            let dup = self.profile.duplicate_probability > 0.0
                && self.rng.random::<f64>() < self.profile.duplicate_probability;
            if dup {
                out.push(row.clone());
            }
            out.push(row);
        }
        out
    }
}
