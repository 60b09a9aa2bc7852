//! Scenario schema: cells, UEs, buildings and simulation parameters.
//!
//! Scenarios are exchanged as JSON. A document is either a complete
//! [`Scenario`] or a preset reference such as
//! `{"preset": "default", "seed": 7, "duration_s": 600}` which expands to
//! [`builtin_default_scenario`] with the listed top-level fields overridden.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("unknown scenario preset `{0}`")]
    UnknownPreset(String),
    #[error("scenario validation failed: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Axis-aligned simulation area with its origin at (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Area {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width_m && p.y <= self.height_m
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width_m), p.y.clamp(0.0, self.height_m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CellKind {
    Macro,
    Micro,
}

impl CellKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellKind::Macro => "MACRO",
            CellKind::Micro => "MICRO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelModel {
    UMa,
    UMi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub cell_id: String,
    pub kind: CellKind,
    pub position: Point,
    pub antenna_height_m: f64,
    pub center_freq_mhz: f64,
    pub bandwidth_mhz: f64,
    pub tx_power_dbm: f64,
    /// Carried for completeness; antennas are modelled as isotropic.
    pub antenna_tilt_deg: f64,
    pub channel_model: ChannelModel,
    pub power_max_w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_sleep_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shutdown_delay_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_rate_db_per_s: Option<f64>,
    #[serde(default = "default_capacity_max")]
    pub capacity_max: u32,
}

impl CellConfig {
    pub fn is_macro(&self) -> bool {
        self.kind == CellKind::Macro
    }

    /// Sleep power; MACRO cells never sleep so this falls back to `power_max_w`.
    pub fn sleep_power_w(&self) -> f64 {
        self.power_sleep_w.unwrap_or(self.power_max_w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UeClass {
    Pedestrian,
    Indoor,
    FastCar,
    SlowCar,
}

impl UeClass {
    pub const ALL: [UeClass; 4] = [
        UeClass::Pedestrian,
        UeClass::Indoor,
        UeClass::FastCar,
        UeClass::SlowCar,
    ];

    /// Per-class defaults: (count, speed m/s, target Mbps, mean inter-call s, mean call s).
    pub fn defaults(&self) -> (usize, f64, f64, f64, f64) {
        match self {
            UeClass::Pedestrian => (64, 2.0, 20.0, 1000.0, 30.0),
            UeClass::Indoor => (50, 0.0, 50.0, 600.0, 30.0),
            UeClass::FastCar => (75, 15.0, 30.0, 100.0, 30.0),
            UeClass::SlowCar => (57, 10.0, 23.0, 600.0, 30.0),
        }
    }

    fn id_prefix(&self) -> &'static str {
        match self {
            UeClass::Pedestrian => "ped",
            UeClass::Indoor => "indoor",
            UeClass::FastCar => "fastcar",
            UeClass::SlowCar => "slowcar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeConfig {
    pub ue_id: String,
    pub class: UeClass,
    pub speed_mps: f64,
    pub height_m: f64,
    pub target_throughput_mbps: f64,
    pub mean_intercall_s: f64,
    pub mean_call_duration_s: f64,
    pub initial_position: Point,
}

impl UeConfig {
    pub fn is_indoor(&self) -> bool {
        self.class == UeClass::Indoor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub height_m: f64,
}

impl Building {
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    fn overlaps(&self, other: &Building, gap: f64) -> bool {
        self.x_min - gap < other.x_max
            && other.x_min - gap < self.x_max
            && self.y_min - gap < other.y_max
            && other.y_min - gap < self.y_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceModel {
    /// Every active co-channel cell interferes at its current tx power.
    FullBuffer,
    /// Interference scaled by the interferer's PRB utilisation on the previous tick.
    LoadWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioParams {
    pub noise_figure_db: f64,
    /// Spectral-efficiency ceiling in bit/s/Hz.
    pub se_cap: f64,
    pub shadowing: bool,
    pub handover_hysteresis_db: f64,
    pub interference: InterferenceModel,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            noise_figure_db: 9.0,
            se_cap: 7.4,
            shadowing: true,
            handover_hysteresis_db: 3.0,
            interference: InterferenceModel::LoadWeighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerParams {
    /// Fraction of `power_max_w` drawn by an active cell at zero load.
    pub idle_fraction: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        Self { idle_fraction: 0.35 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KpmParams {
    /// Ticks averaged into `conn_mean`.
    pub window_ticks: usize,
    /// Strongest neighbours reported per UE; `null` reports every cell.
    pub neighbour_report_limit: Option<usize>,
    /// Report every UE x cell pair, including what sleeping cells would
    /// deliver at nominal power.
    pub full_measurement: bool,
}

impl Default for KpmParams {
    fn default() -> Self {
        Self {
            window_ticks: 5,
            neighbour_report_limit: Some(8),
            full_measurement: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub area: Area,
    pub cells: Vec<CellConfig>,
    pub ues: Vec<UeConfig>,
    #[serde(default)]
    pub buildings: Vec<Building>,
    pub seed: u64,
    #[serde(default = "default_tick")]
    pub tick_s: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_rsrp_min")]
    pub rsrp_min_dbm: f64,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub power: PowerParams,
    #[serde(default)]
    pub kpm: KpmParams,
}

pub const DEFAULT_CAPACITY_MAX: u32 = 64;
pub const DEFAULT_RSRP_MIN_DBM: f64 = -110.0;
pub const DEFAULT_AREA: Area = Area {
    width_m: 1200.0,
    height_m: 600.0,
};

fn default_capacity_max() -> u32 {
    DEFAULT_CAPACITY_MAX
}
fn default_tick() -> f64 {
    1.0
}
fn default_duration() -> f64 {
    7200.0
}
fn default_rsrp_min() -> f64 {
    DEFAULT_RSRP_MIN_DBM
}

impl Scenario {
    pub fn cell(&self, id: &str) -> Option<&CellConfig> {
        self.cells.iter().find(|c| c.cell_id == id)
    }

    pub fn tick_count(&self) -> u64 {
        (self.duration_s / self.tick_s).round() as u64
    }

    pub fn macro_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_macro()).count()
    }

    pub fn micro_count(&self) -> usize {
        self.cells.len() - self.macro_count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario is always serialisable")
    }

    /// Checks every invariant and reports all failures at once.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut errs = Vec::new();
        if !(self.area.width_m > 0.0 && self.area.height_m > 0.0) {
            errs.push("area: width_m and height_m must be positive".to_string());
        }
        if self.cells.is_empty() {
            errs.push("cells: at least one cell is required".to_string());
        }
        if self.ues.is_empty() {
            errs.push("ues: at least one UE is required".to_string());
        }
        let mut seen = HashSet::new();
        for c in &self.cells {
            if !seen.insert(c.cell_id.as_str()) {
                errs.push(format!("cells: duplicate cell_id `{}`", c.cell_id));
            }
            validate_cell(c, &self.area, &mut errs);
        }
        let mut seen = HashSet::new();
        for u in &self.ues {
            if !seen.insert(u.ue_id.as_str()) {
                errs.push(format!("ues: duplicate ue_id `{}`", u.ue_id));
            }
            validate_ue(u, self, &mut errs);
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if !(b.x_min < b.x_max && b.y_min < b.y_max && b.height_m > 0.0) {
                errs.push(format!("buildings[{i}]: empty footprint or non-positive height"));
            }
        }
        if !(self.tick_s > 0.0) {
            errs.push("tick_s: must be positive".to_string());
        } else if !(self.duration_s > 0.0) {
            errs.push("duration_s: must be positive".to_string());
        } else {
            let ratio = self.duration_s / self.tick_s;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
                errs.push(format!(
                    "duration_s: {} is not a multiple of tick_s {}",
                    self.duration_s, self.tick_s
                ));
            }
        }
        if !self.rsrp_min_dbm.is_finite() {
            errs.push("rsrp_min_dbm: must be finite".to_string());
        }
        if !(0.0..=1.0).contains(&self.power.idle_fraction) {
            errs.push("power.idle_fraction: must lie in [0, 1]".to_string());
        }
        if !(self.radio.se_cap > 0.0) {
            errs.push("radio.se_cap: must be positive".to_string());
        }
        if self.radio.handover_hysteresis_db < 0.0 {
            errs.push("radio.handover_hysteresis_db: must be non-negative".to_string());
        }
        if self.kpm.window_ticks == 0 {
            errs.push("kpm.window_ticks: must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errs))
        }
    }
}

fn validate_cell(c: &CellConfig, area: &Area, errs: &mut Vec<String>) {
    let id = &c.cell_id;
    if id.is_empty() {
        errs.push("cells: empty cell_id".to_string());
    }
    if !area.contains(&c.position) {
        errs.push(format!("cell `{id}`: position outside the area"));
    }
    if !(c.antenna_height_m > 0.0) {
        errs.push(format!("cell `{id}`: antenna_height_m must be positive"));
    }
    let f_ghz = c.center_freq_mhz / 1000.0;
    if !(0.5..=100.0).contains(&f_ghz) {
        errs.push(format!("cell `{id}`: center_freq_mhz outside 500..100000"));
    }
    if !(c.bandwidth_mhz > 0.0) {
        errs.push(format!("cell `{id}`: bandwidth_mhz must be positive"));
    }
    if !(c.power_max_w > 0.0) {
        errs.push(format!("cell `{id}`: power_max_w must be positive"));
    }
    if c.capacity_max == 0 {
        errs.push(format!("cell `{id}`: capacity_max must be at least 1"));
    }
    if c.kind == CellKind::Micro {
        match c.power_sleep_w {
            Some(p) if p >= 0.0 && p < c.power_max_w => {}
            Some(_) => errs.push(format!("cell `{id}`: power_sleep_w must be in [0, power_max_w)")),
            None => errs.push(format!("cell `{id}`: MICRO requires power_sleep_w")),
        }
        match c.shutdown_delay_s {
            Some(d) if d > 0.0 => {}
            _ => errs.push(format!("cell `{id}`: MICRO requires shutdown_delay_s > 0")),
        }
        match c.ramp_rate_db_per_s {
            Some(r) if r > 0.0 => {}
            _ => errs.push(format!("cell `{id}`: MICRO requires ramp_rate_db_per_s > 0")),
        }
    }
}

fn validate_ue(u: &UeConfig, sc: &Scenario, errs: &mut Vec<String>) {
    let id = &u.ue_id;
    if id.is_empty() {
        errs.push("ues: empty ue_id".to_string());
    }
    if !sc.area.contains(&u.initial_position) {
        errs.push(format!("ue `{id}`: initial_position outside the area"));
    }
    match u.class {
        UeClass::Indoor => {
            if u.speed_mps != 0.0 {
                errs.push(format!("ue `{id}`: Indoor UEs are static (speed_mps must be 0)"));
            }
            if !sc.buildings.iter().any(|b| b.contains(&u.initial_position)) {
                errs.push(format!("ue `{id}`: Indoor UE is not inside any building"));
            }
        }
        _ => {
            if !(u.speed_mps > 0.0) {
                errs.push(format!("ue `{id}`: mobile UE needs speed_mps > 0"));
            }
        }
    }
    if !(u.height_m > 0.0) {
        errs.push(format!("ue `{id}`: height_m must be positive"));
    }
    if !(u.target_throughput_mbps > 0.0) {
        errs.push(format!("ue `{id}`: target_throughput_mbps must be positive"));
    }
    if !(u.mean_intercall_s > 0.0) {
        errs.push(format!("ue `{id}`: mean_intercall_s must be positive"));
    }
    if !(u.mean_call_duration_s > 0.0) {
        errs.push(format!("ue `{id}`: mean_call_duration_s must be positive"));
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let value: serde_json::Value = serde_json::from_str(document)?;
    let scenario = match value.get("preset") {
        Some(preset) => expand_preset(preset, value.clone())?,
        None => serde_json::from_value(value)?,
    };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetDocument {
    #[allow(dead_code)]
    preset: String,
    #[serde(default = "default_seed")]
    seed: u64,
    tick_s: Option<f64>,
    duration_s: Option<f64>,
    rsrp_min_dbm: Option<f64>,
    radio: Option<RadioParams>,
    power: Option<PowerParams>,
    kpm: Option<KpmParams>,
}

fn default_seed() -> u64 {
    1
}

fn expand_preset(
    preset: &serde_json::Value,
    doc: serde_json::Value,
) -> Result<Scenario, ScenarioError> {
    let name = preset.as_str().unwrap_or_default();
    if name != "default" {
        return Err(ScenarioError::UnknownPreset(preset.to_string()));
    }
    let doc: PresetDocument = serde_json::from_value(doc)?;
    let mut sc = builtin_default_scenario(doc.seed);
    if let Some(t) = doc.tick_s {
        sc.tick_s = t;
    }
    if let Some(d) = doc.duration_s {
        sc.duration_s = d;
    }
    if let Some(r) = doc.rsrp_min_dbm {
        sc.rsrp_min_dbm = r;
    }
    if let Some(r) = doc.radio {
        sc.radio = r;
    }
    if let Some(p) = doc.power {
        sc.power = p;
    }
    if let Some(k) = doc.kpm {
        sc.kpm = k;
    }
    Ok(sc)
}

pub fn macro_cell(id: impl Into<String>, position: Point) -> CellConfig {
    CellConfig {
        cell_id: id.into(),
        kind: CellKind::Macro,
        position,
        antenna_height_m: 20.0,
        center_freq_mhz: 3900.0,
        bandwidth_mhz: 100.0,
        tx_power_dbm: 45.0,
        antenna_tilt_deg: 10.0,
        channel_model: ChannelModel::UMa,
        power_max_w: 379.0,
        power_sleep_w: None,
        shutdown_delay_s: None,
        ramp_rate_db_per_s: None,
        capacity_max: DEFAULT_CAPACITY_MAX,
    }
}

pub fn micro_cell(id: impl Into<String>, position: Point) -> CellConfig {
    CellConfig {
        cell_id: id.into(),
        kind: CellKind::Micro,
        position,
        antenna_height_m: 10.0,
        center_freq_mhz: 4050.0,
        bandwidth_mhz: 100.0,
        tx_power_dbm: 32.0,
        antenna_tilt_deg: 5.0,
        channel_model: ChannelModel::UMi,
        power_max_w: 172.0,
        power_sleep_w: Some(8.0),
        shutdown_delay_s: Some(10.0),
        ramp_rate_db_per_s: Some(3.0),
        capacity_max: DEFAULT_CAPACITY_MAX,
    }
}

pub fn ue_of_class(id: impl Into<String>, class: UeClass, position: Point, height_m: f64) -> UeConfig {
    let (_, speed, target, gap, dur) = class.defaults();
    UeConfig {
        ue_id: id.into(),
        class,
        speed_mps: speed,
        height_m,
        target_throughput_mbps: target,
        mean_intercall_s: gap,
        mean_call_duration_s: dur,
        initial_position: position,
    }
}

const MACRO_COUNT: usize = 10;
const MICRO_COUNT: usize = 41;
const MICRO_MIN_SPACING_M: f64 = 50.0;
const MICRO_EDGE_MARGIN_M: f64 = 25.0;
const MOBILE_UE_HEIGHT_M: f64 = 1.5;

/// The reference 10 MACRO + 41 MICRO / 246 UE scenario.
///
/// MACROs sit on a fixed grid; MICRO sites, buildings and UE start
/// positions come from a layout generator seeded by `seed`.
pub fn builtin_default_scenario(seed: u64) -> Scenario {
    let area = DEFAULT_AREA;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let cells_macro = grid_positions(MACRO_COUNT, &area)
        .into_iter()
        .enumerate()
        .map(|(i, p)| macro_cell(format!("MACRO-{:02}", i + 1), p));

    let n_buildings = rng.random_range(8..=15);
    let mut buildings: Vec<Building> = Vec::with_capacity(n_buildings);
    let mut attempts = 0;
    while buildings.len() < n_buildings && attempts < 10_000 {
        attempts += 1;
        let w = rng.random_range(40.0..120.0);
        let d = rng.random_range(40.0..120.0);
        let x0 = rng.random_range(10.0..(area.width_m - 10.0 - w));
        let y0 = rng.random_range(10.0..(area.height_m - 10.0 - d));
        let b = Building {
            x_min: x0,
            y_min: y0,
            x_max: x0 + w,
            y_max: y0 + d,
            height_m: rng.random_range(20.0..50.0),
        };
        if buildings.iter().all(|o| !o.overlaps(&b, 15.0)) {
            buildings.push(b);
        }
    }

    let mut micro_pos: Vec<Point> = Vec::with_capacity(MICRO_COUNT);
    let mut spacing = MICRO_MIN_SPACING_M;
    while micro_pos.len() < MICRO_COUNT {
        let mut placed = false;
        for _ in 0..5_000 {
            let p = Point::new(
                rng.random_range(MICRO_EDGE_MARGIN_M..area.width_m - MICRO_EDGE_MARGIN_M),
                rng.random_range(MICRO_EDGE_MARGIN_M..area.height_m - MICRO_EDGE_MARGIN_M),
            );
            if micro_pos.iter().all(|q| q.distance(&p) >= spacing) {
                micro_pos.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            // Only reachable for areas far smaller than the default.
            spacing *= 0.9;
        }
    }
    let cells_micro = micro_pos
        .into_iter()
        .enumerate()
        .map(|(i, p)| micro_cell(format!("MICRO-{:02}", i + 1), p));

    let mut ues = Vec::new();
    for class in UeClass::ALL {
        let (count, ..) = class.defaults();
        for i in 0..count {
            let id = format!("{}-{:03}", class.id_prefix(), i + 1);
            let ue = if class == UeClass::Indoor {
                let b = buildings[rng.random_range(0..buildings.len())];
                let p = Point::new(
                    rng.random_range(b.x_min..b.x_max),
                    rng.random_range(b.y_min..b.y_max),
                );
                let h = rng.random_range(MOBILE_UE_HEIGHT_M..b.height_m);
                ue_of_class(id, class, p, h)
            } else {
                let p = Point::new(
                    rng.random_range(0.0..area.width_m),
                    rng.random_range(0.0..area.height_m),
                );
                ue_of_class(id, class, p, MOBILE_UE_HEIGHT_M)
            };
            ues.push(ue);
        }
    }

    Scenario {
        area,
        cells: cells_macro.chain(cells_micro).collect(),
        ues,
        buildings,
        seed,
        tick_s: 1.0,
        duration_s: 7200.0,
        rsrp_min_dbm: DEFAULT_RSRP_MIN_DBM,
        radio: RadioParams::default(),
        power: PowerParams::default(),
        kpm: KpmParams::default(),
    }
}

/// Centres of a near-square grid with `n` sites covering the area.
fn grid_positions(n: usize, area: &Area) -> Vec<Point> {
    let cols = ((n as f64 * area.width_m / area.height_m).sqrt().ceil() as usize).max(1);
    let rows = n.div_ceil(cols);
    let dx = area.width_m / cols as f64;
    let dy = area.height_m / rows as f64;
    (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            Point::new(dx * (c as f64 + 0.5), dy * (r as f64 + 0.5))
        })
        .collect()
}
