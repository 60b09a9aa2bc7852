//! Python bindings. Structured results cross the boundary as plain dicts and
//! lists built from the JSON form of the Rust types.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use esran::campaign::{self, CampaignSpec, ControllerKind};
use esran::oracle::{self, StaticInstance};
use esran::scenario::{builtin_default_scenario, load_scenario, Point, Scenario};
use esran::service::logs::LogMode;
use esran::sim::{aggregate, check_association_constraints, Action, ActionCommand, Simulation};
use esran::xapp::kmeans::{self, KMeansConfig};

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn parse_action(s: &str) -> PyResult<Action> {
    match s {
        "on" => Ok(Action::On),
        "off" => Ok(Action::Off),
        other => Err(value_err(format!("unknown action `{other}`"))),
    }
}

/// Built-in 51-cell, 246-UE scenario as a JSON document.
#[pyfunction]
#[pyo3(signature = (seed=1, duration_s=None))]
fn default_scenario(seed: u64, duration_s: Option<f64>) -> String {
    let mut sc = builtin_default_scenario(seed);
    if let Some(d) = duration_s {
        sc.duration_s = d;
    }
    sc.to_json()
}

#[pyclass(name = "Simulation", module = "esran")]
struct PySimulation {
    inner: Simulation,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(scenario_json: &str) -> PyResult<Self> {
        let sc: Scenario = load_scenario(scenario_json).map_err(value_err)?;
        Ok(Self {
            inner: Simulation::new(sc).map_err(value_err)?,
        })
    }

    /// Advances one tick. `actions` is a list of `(cell_id, "on" | "off")`.
    /// Returns the aggregated metrics of the new snapshot.
    #[pyo3(signature = (actions=None))]
    fn tick<'py>(&mut self, py: Python<'py>, actions: Option<Vec<(String, String)>>) -> PyResult<Bound<'py, PyAny>> {
        let now = self.inner.time();
        let cmds = actions
            .unwrap_or_default()
            .into_iter()
            .map(|(cell_id, a)| {
                Ok(ActionCommand {
                    cell_id,
                    action: parse_action(&a)?,
                    issued_at: now,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let agg = aggregate(self.inner.tick(&cmds));
        to_py(py, &agg)
    }

    /// Runs `ticks` ticks without actions and returns the last aggregate.
    fn run<'py>(&mut self, py: Python<'py>, ticks: u64) -> PyResult<Bound<'py, PyAny>> {
        for _ in 0..ticks {
            if self.inner.finished() {
                break;
            }
            self.inner.tick(&[]);
        }
        to_py(py, &aggregate(self.inner.latest()))
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.latest())
    }

    fn aggregated<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &aggregate(self.inner.latest()))
    }

    /// Association constraint violations of the latest snapshot.
    fn violations(&self) -> Vec<String> {
        check_association_constraints(self.inner.latest(), self.inner.scenario())
            .iter()
            .map(|v| format!("{v:?}"))
            .collect()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    #[getter]
    fn ticks(&self) -> u64 {
        self.inner.ticks()
    }

    #[getter]
    fn finished(&self) -> bool {
        self.inner.finished()
    }

    #[getter]
    fn rejected_actions(&self) -> u64 {
        self.inner.rejected_total()
    }
}

/// Lloyd's algorithm with k-means++ seeding and restarts.
/// Returns `(assignments, centroids, objective, history)`.
#[pyfunction(name = "kmeans")]
#[pyo3(signature = (points, k, seed=0, n_init=10, max_iters=100))]
#[allow(clippy::type_complexity)]
fn py_kmeans(
    points: Vec<(f64, f64)>,
    k: usize,
    seed: u64,
    n_init: usize,
    max_iters: usize,
) -> PyResult<(Vec<usize>, Vec<(f64, f64)>, f64, Vec<f64>)> {
    let pts: Vec<Point> = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
    let cfg = KMeansConfig { max_iters, n_init, seed };
    let r = kmeans::kmeans(&pts, k, &cfg).map_err(value_err)?;
    Ok((
        r.assignments,
        r.centroids.iter().map(|c| (c.x, c.y)).collect(),
        r.objective,
        r.history,
    ))
}

/// Exact optimum of a frozen instance given as JSON.
#[pyfunction]
fn solve_exact<'py>(py: Python<'py>, instance_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let inst: StaticInstance = serde_json::from_str(instance_json).map_err(value_err)?;
    let sol = oracle::solve_exact(&inst).map_err(value_err)?;
    to_py(py, &sol)
}

/// Runs a campaign and returns its per-seed summary rows.
#[pyfunction]
#[pyo3(signature = (output_dir, controllers=None, seeds=None, duration_s=7200.0, full_logs=false))]
fn run_campaign<'py>(
    py: Python<'py>,
    output_dir: PathBuf,
    controllers: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
    duration_s: f64,
    full_logs: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut spec = CampaignSpec::new(output_dir);
    if let Some(names) = controllers {
        spec.controllers = names
            .iter()
            .map(|n| n.parse::<ControllerKind>())
            .collect::<Result<_, _>>()
            .map_err(value_err)?;
    }
    if let Some(s) = seeds {
        spec.seeds = s;
    }
    spec.duration_s = duration_s;
    spec.log_mode = if full_logs { LogMode::Full } else { LogMode::AggregatedOnly };
    let result = py
        .detach(|| campaign::run_campaign(&spec))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &result.summary)
}

#[pymodule]
#[pyo3(name = "esran")]
fn esran_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(default_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(py_kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(solve_exact, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    Ok(())
}
