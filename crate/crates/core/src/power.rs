//! Per-cell power draw and the MICRO shutdown / sleep / wake state machine.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::CellConfig;

#[derive(Debug, Error, PartialEq)]
pub enum PowerError {
    #[error("cell `{0}` is a MACRO cell and cannot be switched off")]
    MacroShutdown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mode {
    Active,
    RampingDown { elapsed_s: f64 },
    Sleeping,
}

impl Mode {
    pub fn label(&self) -> ModeLabel {
        match self {
            Mode::Active => ModeLabel::Active,
            Mode::RampingDown { .. } => ModeLabel::RampingDown,
            Mode::Sleeping => ModeLabel::Sleeping,
        }
    }
}

/// Mode as it appears in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ModeLabel {
    Active,
    RampingDown,
    Sleeping,
}

impl ModeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeLabel::Active => "ACTIVE",
            ModeLabel::RampingDown => "RAMPING_DOWN",
            ModeLabel::Sleeping => "SLEEPING",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMode {
    pub mode: Mode,
    /// Simulation time of the most recent switch-on, `-inf` if never.
    pub last_on_at: f64,
}

impl CellMode {
    pub const fn active() -> Self {
        Self {
            mode: Mode::Active,
            last_on_at: f64::NEG_INFINITY,
        }
    }

    /// Transmit power offset in dB; `-inf` while sleeping.
    pub fn tx_offset_db(&self, cfg: &CellConfig) -> f64 {
        match self.mode {
            Mode::Active => 0.0,
            Mode::RampingDown { elapsed_s } => -cfg.ramp_rate_db_per_s.unwrap_or(0.0) * elapsed_s,
            Mode::Sleeping => f64::NEG_INFINITY,
        }
    }

    pub fn is_sleeping(&self) -> bool {
        self.mode == Mode::Sleeping
    }

    pub fn is_active(&self) -> bool {
        self.mode == Mode::Active
    }

    /// Starts the shutdown ramp. No-op unless the cell is Active.
    pub fn switch_off(self, cfg: &CellConfig) -> Result<Self, PowerError> {
        if cfg.is_macro() {
            return Err(PowerError::MacroShutdown(cfg.cell_id.clone()));
        }
        Ok(match self.mode {
            Mode::Active => Self {
                mode: Mode::RampingDown { elapsed_s: 0.0 },
                ..self
            },
            _ => self,
        })
    }

    /// Wakes a sleeping or ramping cell immediately at full power.
    pub fn switch_on(self, now: f64) -> Self {
        match self.mode {
            Mode::Active => self,
            _ => Self {
                mode: Mode::Active,
                last_on_at: now,
            },
        }
    }
}

/// Power draw in watts.
///
/// Sleeping cells draw their sleep power; otherwise draw is affine in PRB
/// utilisation from `idle_fraction * power_max_w` up to `power_max_w`.
pub fn cell_power(cfg: &CellConfig, mode: &CellMode, utilization: f64, idle_fraction: f64) -> f64 {
    match mode.mode {
        Mode::Sleeping => cfg.sleep_power_w(),
        Mode::Active | Mode::RampingDown { .. } => {
            let p_idle = idle_fraction * cfg.power_max_w;
            p_idle + utilization.clamp(0.0, 1.0) * (cfg.power_max_w - p_idle)
        }
    }
}

/// Advances the mode by `dt`. A ramping cell sleeps once the shutdown delay
/// has elapsed and no UE is attached; until then the offset keeps falling.
pub fn step_mode(cfg: &CellConfig, mode: CellMode, dt: f64, has_ues: bool) -> Result<CellMode, PowerError> {
    match mode.mode {
        Mode::Active | Mode::Sleeping => Ok(mode),
        Mode::RampingDown { .. } if cfg.is_macro() => Err(PowerError::MacroShutdown(cfg.cell_id.clone())),
        Mode::RampingDown { elapsed_s } => {
            let elapsed_s = elapsed_s + dt;
            let delay = cfg.shutdown_delay_s.unwrap_or(0.0);
            let next = if elapsed_s >= delay - 1e-9 && !has_ues {
                Mode::Sleeping
            } else {
                Mode::RampingDown { elapsed_s }
            };
            Ok(CellMode { mode: next, ..mode })
        }
    }
}
