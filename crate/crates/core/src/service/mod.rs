//! RIC-tester style control surface around one running simulation.
//!
//! [`RicService`] is transport agnostic: the HTTP layer in [`http`] and the
//! in-process client in [`client`] both drive it. One simulation at a time.

pub mod client;
pub mod fault;
pub mod http;
pub mod logs;

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::scenario::{CellKind, Scenario};
use crate::sim::{
    aggregate, Action, ActionCommand, AggregatedMetrics, CellReport, KpmSnapshot, Simulation,
    UeNeighbourReport, UeServingReport,
};
use fault::{FaultInjector, FaultProfile};
use logs::{LogError, LogMode, LogWriter};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("simulation {0} is already running")]
    AlreadyRunning(String),
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("unknown simulation {0}")]
    UnknownSimulation(String),
    #[error("no simulation running")]
    NoSimulation,
    #[error("unknown cell {0}")]
    UnknownCell(String),
    #[error("cell {0} is a MACRO and cannot be switched off")]
    MacroOff(String),
    #[error("simulation has finished")]
    Finished,
    #[error("manual stepping requires manual pacing")]
    NotManual,
    #[error("simulation aborted: {0}")]
    Aborted(String),
    #[error(transparent)]
    Log(#[from] LogError),
}

/// How simulated time advances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    /// Only explicit `step` calls advance time.
    Manual,
    /// A background thread ticks every `tick_s / speedup` wall seconds.
    Realtime { speedup: f64 },
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Logs go to `log_root/{sim_id}/` unless a start call names a directory.
    pub log_root: Option<PathBuf>,
    pub log_mode: LogMode,
    pub fault: FaultProfile,
    pub pacing: Pacing,
    /// Ticks kept for `since` queries.
    pub history_ticks: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            log_root: None,
            log_mode: LogMode::Full,
            fault: FaultProfile::default(),
            pacing: Pacing::Manual,
            history_ticks: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionAck {
    pub cell_id: String,
    pub action: Action,
    pub issued_at: f64,
}

/// Returned when a simulation is stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub sim_id: String,
    pub ticks: u64,
    pub simulated_s: f64,
    pub wall_s: f64,
    pub mean_power_w: f64,
    pub mean_dl_throughput_mbps: f64,
    pub mean_outage_count: f64,
    pub mean_sleeping_micro_count: f64,
    pub rejected_actions: u64,
    pub last: Option<AggregatedMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KpmKind {
    Cells,
    UeServing,
    UeNeighbours,
}

#[derive(Default)]
struct Totals {
    ticks: u64,
    power_w: f64,
    throughput_mbps: f64,
    outage: f64,
    sleeping: f64,
}

struct Core {
    sim: Simulation,
    logs: Option<LogWriter>,
    totals: Totals,
    last: Option<AggregatedMetrics>,
}

struct Published {
    snapshots: VecDeque<Arc<KpmSnapshot>>,
    metrics: VecDeque<AggregatedMetrics>,
    time: f64,
    finished: bool,
}

struct Session {
    id: String,
    scenario: Arc<Scenario>,
    core: Mutex<Core>,
    queue: Mutex<Vec<ActionCommand>>,
    published: RwLock<Published>,
    fault: Mutex<FaultInjector>,
    rejected: AtomicU64,
    stop: AtomicBool,
    runner: Mutex<Option<JoinHandle<()>>>,
    started: Instant,
    history: usize,
    failure: Mutex<Option<String>>,
}

impl Session {
    /// Advances one tick. Returns false once the run is over.
    fn advance(&self) -> Result<bool, ServiceError> {
        let mut core = self.core.lock().unwrap();
        if core.sim.finished() {
            return Ok(false);
        }
        let actions = std::mem::take(&mut *self.queue.lock().unwrap());
        let snapshot = Arc::new(core.sim.tick(&actions).clone());
        let rejected = core.sim.take_rejections().len() as u64;
        self.rejected.fetch_add(rejected, Ordering::Relaxed);
        let m = aggregate(&snapshot);
        let t = &mut core.totals;
        t.ticks += 1;
        t.power_w += m.total_power_w;
        t.throughput_mbps += m.total_dl_throughput_mbps;
        t.outage += m.outage_count as f64;
        t.sleeping += m.sleeping_micro_count as f64;
        if let Some(l) = &mut core.logs {
            l.write_tick(&snapshot, &m)?;
        }
        core.last = Some(m.clone());
        let finished = core.sim.finished();
        if finished {
            if let Some(l) = &mut core.logs {
                l.flush()?;
            }
        }
        let time = core.sim.time();
        drop(core);
        let mut p = self.published.write().unwrap();
        p.snapshots.push_back(snapshot);
        p.metrics.push_back(m);
        while p.snapshots.len() > self.history {
            p.snapshots.pop_front();
            p.metrics.pop_front();
        }
        p.time = time;
        p.finished = finished;
        Ok(!finished)
    }

    fn summary(&self) -> RunSummary {
        let core = self.core.lock().unwrap();
        let t = &core.totals;
        let n = t.ticks.max(1) as f64;
        RunSummary {
            sim_id: self.id.clone(),
            ticks: t.ticks,
            simulated_s: core.sim.time(),
            wall_s: self.started.elapsed().as_secs_f64(),
            mean_power_w: t.power_w / n,
            mean_dl_throughput_mbps: t.throughput_mbps / n,
            mean_outage_count: t.outage / n,
            mean_sleeping_micro_count: t.sleeping / n,
            rejected_actions: self.rejected.load(Ordering::Relaxed),
            last: core.last.clone(),
        }
    }

    fn rows_since<T: Clone>(&self, since: Option<f64>, pick: impl Fn(&KpmSnapshot) -> &[T]) -> Vec<T> {
        let p = self.published.read().unwrap();
        match since {
            None => p.snapshots.back().map(|s| pick(s).to_vec()).unwrap_or_default(),
            Some(t) => p
                .snapshots
                .iter()
                .filter(|s| s.timestamp > t)
                .flat_map(|s| pick(s).iter().cloned())
                .collect(),
        }
    }
}

struct Inner {
    config: ServiceConfig,
    session: Mutex<Option<Arc<Session>>>,
    counter: AtomicU64,
}

/// Cheap to clone; all clones share one service.
#[derive(Clone)]
pub struct RicService {
    inner: Arc<Inner>,
}

impl RicService {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            inner: Arc::new(Inner {
                config,
                session: Mutex::new(None),
                counter: AtomicU64::new(0),
            }),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    /// Parses and starts a scenario document.
    pub fn start_document(&self, document: &str) -> Result<String, ServiceError> {
        let scenario = crate::scenario::load_scenario(document).map_err(scenario_error)?;
        self.start(scenario, None)
    }

    /// Starts a simulation, logging to `log_dir` if given, else under the
    /// configured root.
    pub fn start(&self, scenario: Scenario, log_dir: Option<PathBuf>) -> Result<String, ServiceError> {
        let mut slot = self.inner.session.lock().unwrap();
        if let Some(s) = slot.as_ref() {
            return Err(ServiceError::AlreadyRunning(s.id.clone()));
        }
        let n = self.inner.counter.fetch_add(1, Ordering::Relaxed) + 1;
        let id = format!("sim-{n}");
        let cfg = &self.inner.config;
        cfg.fault
            .validate()
            .map_err(|e| ServiceError::InvalidScenario(vec![e]))?;
        let sim = Simulation::new(scenario.clone()).map_err(scenario_error)?;
        let dir = log_dir.or_else(|| cfg.log_root.as_ref().map(|r| r.join(&id)));
        let logs = dir.map(|d| LogWriter::create(&d, cfg.log_mode)).transpose()?;
        let initial = Arc::new(sim.latest().clone());
        let initial_metrics = aggregate(&initial);
        let session = Arc::new(Session {
            id: id.clone(),
            scenario: Arc::new(scenario),
            core: Mutex::new(Core {
                sim,
                logs,
                totals: Totals::default(),
                last: None,
            }),
            queue: Mutex::new(Vec::new()),
            published: RwLock::new(Published {
                snapshots: VecDeque::from([initial]),
                metrics: VecDeque::from([initial_metrics]),
                time: 0.0,
                finished: false,
            }),
            fault: Mutex::new(FaultInjector::new(cfg.fault.clone())),
            rejected: AtomicU64::new(0),
            stop: AtomicBool::new(false),
            runner: Mutex::new(None),
            started: Instant::now(),
            history: cfg.history_ticks.max(1),
            failure: Mutex::new(None),
        });
        if let Pacing::Realtime { speedup } = cfg.pacing {
            let s = Arc::clone(&session);
            let period = Duration::from_secs_f64(s.scenario.tick_s / speedup.max(1e-9));
            let handle = std::thread::spawn(move || {
                let mut next = Instant::now() + period;
                while !s.stop.load(Ordering::Acquire) {
                    let now = Instant::now();
                    if now < next {
                        std::thread::sleep((next - now).min(Duration::from_millis(50)));
                        continue;
                    }
                    next += period;
                    match s.advance() {
                        Ok(true) => {}
                        Ok(false) => break,
                        Err(e) => {
                            log::error!("simulation {} aborted: {e}", s.id);
                            *s.failure.lock().unwrap() = Some(e.to_string());
                            break;
                        }
                    }
                }
            });
            *session.runner.lock().unwrap() = Some(handle);
        }
        log::info!("started {id}");
        *slot = Some(session);
        Ok(id)
    }

    /// Stops the simulation, flushes its logs and returns the run summary.
    pub fn stop(&self, sim_id: &str) -> Result<RunSummary, ServiceError> {
        let session = {
            let mut slot = self.inner.session.lock().unwrap();
            match slot.as_ref() {
                Some(s) if s.id == sim_id => slot.take().unwrap(),
                _ => return Err(ServiceError::UnknownSimulation(sim_id.to_string())),
            }
        };
        session.stop.store(true, Ordering::Release);
        if let Some(h) = session.runner.lock().unwrap().take() {
            let _ = h.join();
        }
        if let Some(l) = &mut session.core.lock().unwrap().logs {
            l.flush()?;
        }
        log::info!("stopped {sim_id}");
        Ok(session.summary())
    }

    fn current(&self) -> Result<Arc<Session>, ServiceError> {
        self.inner
            .session
            .lock()
            .unwrap()
            .clone()
            .ok_or(ServiceError::NoSimulation)
    }

    fn session(&self, sim_id: &str) -> Result<Arc<Session>, ServiceError> {
        match self.inner.session.lock().unwrap().as_ref() {
            Some(s) if s.id == sim_id => Ok(Arc::clone(s)),
            _ => Err(ServiceError::UnknownSimulation(sim_id.to_string())),
        }
    }

    pub fn current_id(&self) -> Option<String> {
        self.inner.session.lock().unwrap().as_ref().map(|s| s.id.clone())
    }

    /// Advances a manually paced simulation by up to `ticks`; returns the new time.
    pub fn step(&self, sim_id: &str, ticks: u64) -> Result<f64, ServiceError> {
        if self.inner.config.pacing != Pacing::Manual {
            return Err(ServiceError::NotManual);
        }
        let s = self.session(sim_id)?;
        for _ in 0..ticks {
            if !s.advance()? {
                break;
            }
        }
        let time = s.published.read().unwrap().time;
        Ok(time)
    }

    pub fn time(&self) -> Result<f64, ServiceError> {
        Ok(self.current()?.published.read().unwrap().time)
    }

    pub fn finished(&self) -> Result<bool, ServiceError> {
        let s = self.current()?;
        if let Some(e) = s.failure.lock().unwrap().clone() {
            return Err(ServiceError::Aborted(e));
        }
        let finished = s.published.read().unwrap().finished;
        Ok(finished)
    }

    /// Latest uncorrupted snapshot.
    pub fn latest_snapshot(&self) -> Result<Arc<KpmSnapshot>, ServiceError> {
        let s = self.current()?;
        let p = s.published.read().unwrap();
        Ok(Arc::clone(p.snapshots.back().expect("initial snapshot is always published")))
    }

    pub fn cells(&self, since: Option<f64>) -> Result<Vec<CellReport>, ServiceError> {
        let s = self.current()?;
        let rows = s.rows_since(since, |k| &k.cell_reports);
        let rows = s.fault.lock().unwrap().apply(rows);
        Ok(rows)
    }

    pub fn ue_serving(&self, since: Option<f64>) -> Result<Vec<UeServingReport>, ServiceError> {
        let s = self.current()?;
        let rows = s.rows_since(since, |k| &k.ue_serving_reports);
        let rows = s.fault.lock().unwrap().apply(rows);
        Ok(rows)
    }

    pub fn ue_neighbours(&self, since: Option<f64>) -> Result<Vec<UeNeighbourReport>, ServiceError> {
        let s = self.current()?;
        let rows = s.rows_since(since, |k| &k.ue_neighbour_reports);
        let rows = s.fault.lock().unwrap().apply(rows);
        Ok(rows)
    }

    pub fn aggregated(&self, since: Option<f64>) -> Result<Vec<AggregatedMetrics>, ServiceError> {
        let s = self.current()?;
        let p = s.published.read().unwrap();
        Ok(match since {
            None => p.metrics.back().cloned().into_iter().collect(),
            Some(t) => p.metrics.iter().filter(|m| m.timestamp > t).cloned().collect(),
        })
    }

    /// Validates and queues an action for the next tick boundary.
    pub fn post_action(&self, cell_id: &str, action: Action) -> Result<ActionAck, ServiceError> {
        let s = self.current()?;
        let reject = |e: ServiceError| {
            s.rejected.fetch_add(1, Ordering::Relaxed);
            log::warn!("rejected {} for {cell_id}: {e}", action.as_str());
            Err(e)
        };
        let Some(cell) = s.scenario.cell(cell_id) else {
            return reject(ServiceError::UnknownCell(cell_id.to_string()));
        };
        if action == Action::Off && cell.kind == CellKind::Macro {
            return reject(ServiceError::MacroOff(cell_id.to_string()));
        }
        let p = s.published.read().unwrap();
        if p.finished {
            return Err(ServiceError::Finished);
        }
        let issued_at = p.time;
        s.queue.lock().unwrap().push(ActionCommand {
            cell_id: cell_id.to_string(),
            action,
            issued_at,
        });
        Ok(ActionAck {
            cell_id: cell_id.to_string(),
            action,
            issued_at,
        })
    }

    /// Actions refused so far, by validation or by the simulator.
    pub fn rejected_actions(&self) -> Result<u64, ServiceError> {
        Ok(self.current()?.rejected.load(Ordering::Relaxed))
    }
}

fn scenario_error(e: crate::scenario::ScenarioError) -> ServiceError {
    use crate::scenario::ScenarioError;
    match e {
        ScenarioError::Invalid(list) => ServiceError::InvalidScenario(list),
        other => ServiceError::InvalidScenario(vec![other.to_string()]),
    }
}
