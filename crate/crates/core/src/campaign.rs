//! Experiment campaigns: every controller over the same seeds, in lockstep
//! with the simulator, plus summaries and time series from the logs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, BaselineXapp};
use crate::scenario::{builtin_default_scenario, Scenario};
use crate::service::client::InProcessClient;
use crate::service::fault::FaultProfile;
use crate::service::logs::{self, AuditRow, LogError, LogMode};
use crate::service::{Pacing, RicService, ServiceConfig, ServiceError};
use crate::sim::{AggregatedMetrics, KpmSnapshot};
use crate::xapp::{Controller, HybridXapp, XappConfig};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TABLE_FILE: &str = "summary_table.csv";
pub const POWER_SERIES_FILE: &str = "power_timeseries.csv";
pub const THROUGHPUT_SERIES_FILE: &str = "throughput_timeseries.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    AllOn,
    Heuristic,
    Hybrid,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::AllOn, ControllerKind::Heuristic, ControllerKind::Hybrid];

    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::AllOn => "all_on",
            ControllerKind::Heuristic => "heuristic",
            ControllerKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown controller `{s}` (expected all_on, heuristic or hybrid)"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid campaign: {0}")]
    Config(String),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("missing log {0}")]
    MissingLog(PathBuf),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Where each run's scenario comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSource {
    /// The built-in layout generated from the run seed.
    Builtin,
    /// A fixed layout; only its `seed` is replaced by the run seed.
    Fixed(Scenario),
}

impl ScenarioSource {
    pub fn for_seed(&self, seed: u64, duration_s: f64) -> Scenario {
        let mut sc = match self {
            ScenarioSource::Builtin => builtin_default_scenario(seed),
            ScenarioSource::Fixed(s) => s.clone(),
        };
        sc.seed = seed;
        sc.duration_s = duration_s;
        sc
    }
}

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub scenario: ScenarioSource,
    pub controllers: Vec<ControllerKind>,
    pub seeds: Vec<u64>,
    pub duration_s: f64,
    pub output_dir: PathBuf,
    pub log_mode: LogMode,
    pub fault: FaultProfile,
    pub xapp: XappConfig,
    pub baseline: BaselineConfig,
}

impl CampaignSpec {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario: ScenarioSource::Builtin,
            controllers: ControllerKind::ALL.to_vec(),
            seeds: vec![1, 2, 3, 4, 5],
            duration_s: 7200.0,
            output_dir: output_dir.into(),
            log_mode: LogMode::Full,
            fault: FaultProfile::default(),
            xapp: XappConfig::default(),
            baseline: BaselineConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if self.controllers.is_empty() {
            return Err(CampaignError::Config("at least one controller is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(CampaignError::Config("at least one seed is required".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(CampaignError::Config(format!("duration must be positive, got {}", self.duration_s)));
        }
        self.xapp.validate().map_err(CampaignError::Config)?;
        self.fault.validate().map_err(CampaignError::Config)
    }

    pub fn run_dir(&self, controller: ControllerKind, seed: u64) -> PathBuf {
        run_dir(&self.output_dir, controller, seed)
    }
}

pub fn run_dir(root: &Path, controller: ControllerKind, seed: u64) -> PathBuf {
    root.join(controller.as_str()).join(seed.to_string())
}

/// Totals of one (controller, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub controller: ControllerKind,
    pub seed: u64,
    pub ticks: u64,
    pub mean_power_w: f64,
    pub mean_dl_throughput_mbps: f64,
    pub mean_outage_count: f64,
    pub mean_sleeping_micro_count: f64,
    pub commands: usize,
    pub rejected_actions: u64,
    pub nan_rows_dropped: usize,
    pub duplicate_rows_dropped: usize,
    pub controller_errors: usize,
}

fn make_controller(kind: ControllerKind, seed: u64, spec: &CampaignSpec) -> Option<(Box<dyn Controller>, f64)> {
    match kind {
        ControllerKind::AllOn => None,
        ControllerKind::Heuristic => {
            let cfg = BaselineConfig {
                seed,
                ..spec.baseline.clone()
            };
            let period = cfg.loop_period_s;
            Some((Box::new(BaselineXapp::new(cfg)), period))
        }
        ControllerKind::Hybrid => {
            let mut cfg = spec.xapp.clone();
            cfg.seed = seed;
            cfg.kmeans.seed = seed;
            let period = cfg.loop_period_s;
            Some((Box::new(HybridXapp::new(cfg)), period))
        }
    }
}

/// Runs one controller against one scenario, calling `observe` with every
/// tick's uncorrupted snapshot. Logs and the audit trail go to `dir`.
pub fn run_single(
    spec: &CampaignSpec,
    kind: ControllerKind,
    seed: u64,
    dir: &Path,
    observe: &mut dyn FnMut(&KpmSnapshot),
) -> Result<RunRecord, CampaignError> {
    let scenario = spec.scenario.for_seed(seed, spec.duration_s);
    let ticks = scenario.tick_count();
    let tick_s = scenario.tick_s;
    let service = RicService::new(ServiceConfig {
        log_root: None,
        log_mode: spec.log_mode,
        fault: FaultProfile {
            seed: spec.fault.seed ^ seed,
            ..spec.fault.clone()
        },
        pacing: Pacing::Manual,
        history_ticks: 1,
    });
    let id = service.start(scenario, Some(dir.to_path_buf()))?;
    let mut controller = make_controller(kind, seed, spec);
    let every = controller
        .as_ref()
        .map(|(_, p)| ((p / tick_s).round() as u64).max(1))
        .unwrap_or(u64::MAX);
    let mut client = InProcessClient::new(service.clone());
    let mut audit: Vec<AuditRow> = Vec::new();
    let mut record = RunRecord {
        controller: kind,
        seed,
        ticks: 0,
        mean_power_w: 0.0,
        mean_dl_throughput_mbps: 0.0,
        mean_outage_count: 0.0,
        mean_sleeping_micro_count: 0.0,
        commands: 0,
        rejected_actions: 0,
        nan_rows_dropped: 0,
        duplicate_rows_dropped: 0,
        controller_errors: 0,
    };
    for t in 0..ticks {
        if let Some((c, _)) = controller.as_mut() {
            if t % every == 0 {
                let it = c.iterate(&mut client);
                record.nan_rows_dropped += it.cleaning.nan_dropped;
                record.duplicate_rows_dropped += it.cleaning.duplicates_dropped;
                record.controller_errors += it.error.is_some() as usize;
                audit.extend(it.commands);
            }
        }
        service.step(&id, 1)?;
        let snap = service.latest_snapshot()?;
        observe(&snap);
    }
    let summary = service.stop(&id)?;
    logs::write_audit(&dir.join(logs::ACTIONS_FILE), &audit)?;
    record.ticks = summary.ticks;
    record.mean_power_w = summary.mean_power_w;
    record.mean_dl_throughput_mbps = summary.mean_dl_throughput_mbps;
    record.mean_outage_count = summary.mean_outage_count;
    record.mean_sleeping_micro_count = summary.mean_sleeping_micro_count;
    record.commands = audit.len();
    record.rejected_actions = summary.rejected_actions;
    Ok(record)
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub controller: ControllerKind,
    pub seed: u64,
    pub ticks: u64,
    pub mean_power_kw: f64,
    pub mean_throughput_gbps: f64,
    pub mean_outage_count: f64,
    pub mean_sleeping_micro_count: f64,
    /// `(all_on - method) / all_on * 100` on the same seed.
    pub power_reduction_pct: Option<f64>,
    /// `(method - all_on) / all_on * 100`; negative is a loss.
    pub throughput_change_pct: Option<f64>,
}

/// Mean, min and max over seeds, one row per controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub controller: ControllerKind,
    pub seeds: usize,
    pub mean_power_kw: f64,
    pub min_power_kw: f64,
    pub max_power_kw: f64,
    pub mean_throughput_gbps: f64,
    pub min_throughput_gbps: f64,
    pub max_throughput_gbps: f64,
    pub mean_power_reduction_pct: Option<f64>,
    pub min_power_reduction_pct: Option<f64>,
    pub max_power_reduction_pct: Option<f64>,
    pub mean_throughput_change_pct: Option<f64>,
    pub min_throughput_change_pct: Option<f64>,
    pub max_throughput_change_pct: Option<f64>,
}

impl SummaryRow {
    fn from_means(controller: ControllerKind, seed: u64, ticks: u64, power_w: f64, thr_mbps: f64, outage: f64, sleeping: f64) -> Self {
        Self {
            controller,
            seed,
            ticks,
            mean_power_kw: power_w / 1000.0,
            mean_throughput_gbps: thr_mbps / 1000.0,
            mean_outage_count: outage,
            mean_sleeping_micro_count: sleeping,
            power_reduction_pct: None,
            throughput_change_pct: None,
        }
    }
}

/// Fills the reduction columns against the `all_on` row of each seed.
pub fn attach_reductions(rows: &mut [SummaryRow]) {
    let base: Vec<(u64, f64, f64)> = rows
        .iter()
        .filter(|r| r.controller == ControllerKind::AllOn)
        .map(|r| (r.seed, r.mean_power_kw, r.mean_throughput_gbps))
        .collect();
    for r in rows.iter_mut() {
        if r.controller == ControllerKind::AllOn {
            continue;
        }
        if let Some(&(_, p, t)) = base.iter().find(|b| b.0 == r.seed) {
            r.power_reduction_pct = Some((p - r.mean_power_kw) / p * 100.0);
            r.throughput_change_pct = Some((r.mean_throughput_gbps - t) / t * 100.0);
        }
    }
}

fn stats(v: &[f64]) -> (f64, f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, min, max)
}

fn opt_stats(v: &[Option<f64>]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let some: Vec<f64> = v.iter().flatten().copied().collect();
    if some.is_empty() {
        return (None, None, None);
    }
    let (a, b, c) = stats(&some);
    (Some(a), Some(b), Some(c))
}

pub fn table(rows: &[SummaryRow]) -> Vec<TableRow> {
    let mut kinds: Vec<ControllerKind> = rows.iter().map(|r| r.controller).collect();
    kinds.sort();
    kinds.dedup();
    kinds
        .into_iter()
        .map(|k| {
            let mine: Vec<&SummaryRow> = rows.iter().filter(|r| r.controller == k).collect();
            let p = stats(&mine.iter().map(|r| r.mean_power_kw).collect::<Vec<_>>());
            let t = stats(&mine.iter().map(|r| r.mean_throughput_gbps).collect::<Vec<_>>());
            let pr = opt_stats(&mine.iter().map(|r| r.power_reduction_pct).collect::<Vec<_>>());
            let tc = opt_stats(&mine.iter().map(|r| r.throughput_change_pct).collect::<Vec<_>>());
            TableRow {
                controller: k,
                seeds: mine.len(),
                mean_power_kw: p.0,
                min_power_kw: p.1,
                max_power_kw: p.2,
                mean_throughput_gbps: t.0,
                min_throughput_gbps: t.1,
                max_throughput_gbps: t.2,
                mean_power_reduction_pct: pr.0,
                min_power_reduction_pct: pr.1,
                max_power_reduction_pct: pr.2,
                mean_throughput_change_pct: tc.0,
                min_throughput_change_pct: tc.1,
                max_throughput_change_pct: tc.2,
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CampaignError> {
    let wrap = |source: csv::Error| {
        CampaignError::Log(LogError::Csv {
            path: path.to_path_buf(),
            source,
        })
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in rows {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush().map_err(|source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_summaries(dir: &Path, rows: &[SummaryRow]) -> Result<(), CampaignError> {
    write_csv(&dir.join(SUMMARY_FILE), rows)?;
    write_csv(&dir.join(TABLE_FILE), &table(rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    pub table: Vec<TableRow>,
}

/// Runs every (seed, controller) pair in order. Summaries are rewritten after
/// every run so an aborted campaign leaves its finished runs on disk.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult, CampaignError> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.output_dir).map_err(|source| CampaignError::Io {
        path: spec.output_dir.clone(),
        source,
    })?;
    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for &seed in &spec.seeds {
        for &kind in &spec.controllers {
            let dir = spec.run_dir(kind, seed);
            log::info!("running {kind} seed {seed}");
            let r = run_single(spec, kind, seed, &dir, &mut |_| {})?;
            summary.push(SummaryRow::from_means(
                kind,
                seed,
                r.ticks,
                r.mean_power_w,
                r.mean_dl_throughput_mbps,
                r.mean_outage_count,
                r.mean_sleeping_micro_count,
            ));
            runs.push(r);
            attach_reductions(&mut summary);
            write_summaries(&spec.output_dir, &summary)?;
        }
    }
    for &kind in &spec.controllers {
        emit_timeseries(&spec.output_dir, kind)?;
    }
    let table = table(&summary);
    Ok(CampaignResult { runs, summary, table })
}

fn seed_dirs(root: &Path, kind: ControllerKind) -> Result<Vec<(u64, PathBuf)>, CampaignError> {
    let dir = root.join(kind.as_str());
    let rd = match std::fs::read_dir(&dir) {
        Ok(rd) => rd,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => return Err(CampaignError::Io { path: dir, source }),
    };
    let mut out: Vec<(u64, PathBuf)> = rd
        .filter_map(Result::ok)
        .filter_map(|e| {
            let seed = e.file_name().to_str()?.parse::<u64>().ok()?;
            e.path().is_dir().then(|| (seed, e.path()))
        })
        .collect();
    out.sort();
    Ok(out)
}

fn read_run(path: &Path) -> Result<Vec<AggregatedMetrics>, CampaignError> {
    let file = path.join(logs::AGGREGATED_FILE);
    if !file.exists() {
        return Err(CampaignError::MissingLog(file));
    }
    Ok(logs::read_aggregated(&file)?)
}

/// Rebuilds the summary rows from the `aggregated.csv` logs under `root`.
pub fn summarize(root: &Path) -> Result<Vec<SummaryRow>, CampaignError> {
    let mut rows = Vec::new();
    for kind in ControllerKind::ALL {
        for (seed, dir) in seed_dirs(root, kind)? {
            let m = read_run(&dir)?;
            let n = m.len().max(1) as f64;
            let mean = |f: &dyn Fn(&AggregatedMetrics) -> f64| m.iter().map(f).sum::<f64>() / n;
            rows.push(SummaryRow::from_means(
                kind,
                seed,
                m.len() as u64,
                mean(&|a| a.total_power_w),
                mean(&|a| a.total_dl_throughput_mbps),
                mean(&|a| a.outage_count as f64),
                mean(&|a| a.sleeping_micro_count as f64),
            ));
        }
    }
    attach_reductions(&mut rows);
    write_summaries(root, &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PowerPoint {
    timestamp: f64,
    seed: u64,
    total_power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ThroughputPoint {
    timestamp: f64,
    seed: u64,
    total_dl_throughput_mbps: f64,
}

/// Writes long-format power and throughput series for one controller to
/// `root/{controller}/`. Returns the number of rows per file.
pub fn emit_timeseries(root: &Path, kind: ControllerKind) -> Result<usize, CampaignError> {
    let mut power = Vec::new();
    let mut thr = Vec::new();
    for (seed, dir) in seed_dirs(root, kind)? {
        for m in read_run(&dir)? {
            power.push(PowerPoint {
                timestamp: m.timestamp,
                seed,
                total_power_w: m.total_power_w,
            });
            thr.push(ThroughputPoint {
                timestamp: m.timestamp,
                seed,
                total_dl_throughput_mbps: m.total_dl_throughput_mbps,
            });
        }
    }
    let dir = root.join(kind.as_str());
    if power.is_empty() && !dir.exists() {
        return Err(CampaignError::MissingLog(dir.join("*").join(logs::AGGREGATED_FILE)));
    }
    write_csv(&dir.join(POWER_SERIES_FILE), &power)?;
    write_csv(&dir.join(THROUGHPUT_SERIES_FILE), &thr)?;
    Ok(power.len())
}

/// Outcome of one ordering or threshold check on a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Power ordering, hybrid saving and throughput-loss checks per seed.
pub fn check_campaign(rows: &[SummaryRow]) -> Vec<Check> {
    let find = |k: ControllerKind, seed: u64| rows.iter().find(|r| r.controller == k && r.seed == seed);
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort();
    seeds.dedup();
    let mut checks = Vec::new();
    let mut heuristic_worse = 0;
    let mut compared = 0usize;
    for seed in seeds {
        let (Some(a), Some(h), Some(y)) = (
            find(ControllerKind::AllOn, seed),
            find(ControllerKind::Heuristic, seed),
            find(ControllerKind::Hybrid, seed),
        ) else {
            continue;
        };
        compared += 1;
        checks.push(Check {
            name: format!("power ordering seed {seed}"),
            passed: y.mean_power_kw < h.mean_power_kw && h.mean_power_kw < a.mean_power_kw,
            detail: format!(
                "hybrid {:.4} kW, heuristic {:.4} kW, all_on {:.4} kW",
                y.mean_power_kw, h.mean_power_kw, a.mean_power_kw
            ),
        });
        let red = y.power_reduction_pct.unwrap_or(f64::NAN);
        let chg = y.throughput_change_pct.unwrap_or(f64::NAN);
        checks.push(Check {
            name: format!("hybrid saving >= 8% and loss <= 2% seed {seed}"),
            passed: red >= 8.0 && chg >= -2.0,
            detail: format!("reduction {red:.2}%, throughput change {chg:.2}%"),
        });
        let h_chg = h.throughput_change_pct.unwrap_or(f64::NAN);
        if -h_chg > -chg {
            heuristic_worse += 1;
        }
    }
    if compared > 0 {
        let need = (compared * 4).div_ceil(5);
        checks.push(Check {
            name: "heuristic loses more throughput than hybrid".into(),
            passed: heuristic_worse >= need,
            detail: format!("{heuristic_worse}/{compared} seeds (need {need})"),
        });
    }
    checks
}
