//! Deterministic tick loop of the network model.

mod attach;
mod engine;
pub mod kpm;

pub use attach::{attach_ues, AttachInput};
pub use engine::{Rejection, Simulation};
pub use kpm::{
    aggregate, check_association_constraints, AggregatedMetrics, CellReport, KpmSnapshot,
    UeNeighbourReport, UeServingReport, Violation, HEAVY_UTILIZATION,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    On,
    Off,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::On => "on",
            Action::Off => "off",
        }
    }
}

/// Cell on/off directive from a controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCommand {
    pub cell_id: String,
    pub action: Action,
    pub issued_at: f64,
}
