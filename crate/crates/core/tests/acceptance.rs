//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::exhaustive_optimum;
use esran::campaign::{run_campaign, run_single, CampaignSpec, ControllerKind, ScenarioSource, SummaryRow};
use esran::oracle::{snapshot_to_instance, solve_exact};
use esran::power::{cell_power, step_mode, CellMode, Mode, ModeLabel};
use esran::scenario::{builtin_default_scenario, CellKind, Point, Scenario};
use esran::service::fault::FaultProfile;
use esran::service::logs::{
    LogMode, ACTIONS_FILE, AGGREGATED_FILE, CELL_REPORTS_FILE, UE_NEIGHBOUR_FILE, UE_SERVING_FILE,
};
use esran::sim::{check_association_constraints, KpmSnapshot};
use esran::xapp::kmeans::{kmeans, KMeansConfig};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

fn constraint_suite() -> Outcome {
    let dir = tempdir();
    let mut spec = CampaignSpec::new(dir.path());
    spec.duration_s = 1000.0;
    let scenario = spec.scenario.for_seed(1, spec.duration_s);
    let started = Instant::now();
    let mut violations = 0usize;
    let mut ticks = 0usize;
    let mut observe = |s: &KpmSnapshot| {
        ticks += 1;
        violations += check_association_constraints(s, &scenario).len();
    };
    let rec = run_single(&spec, ControllerKind::Hybrid, 1, dir.path(), &mut observe);
    let secs = started.elapsed().as_secs_f64();
    match rec {
        Ok(_) => outcome(
            violations == 0 && ticks == 1000 && secs < 120.0,
            format!("{ticks} ticks, {violations} violations, {secs:.1} s"),
        ),
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn determinism() -> Outcome {
    let a = tempdir();
    let b = tempdir();
    let mut spec = CampaignSpec::new(a.path());
    spec.duration_s = 600.0;
    for dir in [a.path(), b.path()] {
        if let Err(e) = run_single(&spec, ControllerKind::Hybrid, 2, dir, &mut |_| {}) {
            return outcome(false, format!("run failed: {e}"));
        }
    }
    let files = [CELL_REPORTS_FILE, UE_SERVING_FILE, UE_NEIGHBOUR_FILE, AGGREGATED_FILE, ACTIONS_FILE];
    let mut bytes = 0;
    let mut differing = Vec::new();
    for f in files {
        let x = fs::read(a.path().join(f)).unwrap_or_default();
        let y = fs::read(b.path().join(f)).unwrap_or_default();
        bytes += x.len();
        if x != y || x.is_empty() {
            differing.push(f);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} files, {bytes} bytes compared, differing: {differing:?}", files.len()),
    )
}

fn kmeans_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 200;
    let (mut matched, mut below, mut increasing) = (0, 0, 0);
    for t in 0..trials {
        let n = rng.random_range(2..=8);
        let k = rng.random_range(1..=n.min(4));
        let points: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0)))
            .collect();
        let r = kmeans(&points, k, &KMeansConfig { seed: t, ..Default::default() }).expect("valid k");
        let opt = exhaustive_optimum(&points, k);
        let tol = 1e-9 * opt.max(1.0);
        if r.objective < opt - tol {
            below += 1;
        } else if r.objective <= opt + tol {
            matched += 1;
        }
        if r.history.windows(2).any(|w| w[1] > w[0] + 1e-9 * w[0].max(1.0)) {
            increasing += 1;
        }
    }
    let rate = matched as f64 / trials as f64;
    outcome(
        rate >= 0.95 && below == 0 && increasing == 0,
        format!(
            "{matched}/{trials} optimal ({:.1}%), {below} below optimum, {increasing} with an objective increase",
            rate * 100.0
        ),
    )
}

/// The built-in layout cut down to its MACROs and ten MICROs, with every
/// UE x cell pair reported.
fn small_full_measurement(seed: u64) -> Scenario {
    let mut sc = builtin_default_scenario(seed);
    let mut micros = 0;
    sc.cells.retain(|c| {
        if c.kind == CellKind::Macro {
            return true;
        }
        micros += 1;
        micros <= 10
    });
    sc.kpm.full_measurement = true;
    sc.kpm.neighbour_report_limit = None;
    sc
}

fn optimality_gap() -> Outcome {
    let dir = tempdir();
    let sc = small_full_measurement(3);
    let mut spec = CampaignSpec::new(dir.path());
    spec.scenario = ScenarioSource::Fixed(sc);
    spec.duration_s = 1300.0;
    spec.log_mode = LogMode::AggregatedOnly;
    let scenario = spec.scenario.for_seed(3, spec.duration_s);
    let mut frozen = Vec::new();
    let mut observe = |s: &KpmSnapshot| {
        let t = s.timestamp as u64;
        if t >= 100 && t % 20 == 0 {
            frozen.push(s.clone());
        }
    };
    if let Err(e) = run_single(&spec, ControllerKind::Hybrid, 3, dir.path(), &mut observe) {
        return outcome(false, format!("run failed: {e}"));
    }
    let (mut ok, mut gap_sum, mut errors) = (0usize, 0.0, 0usize);
    for s in &frozen {
        let sleeping = s
            .cell_reports
            .iter()
            .filter(|c| c.kind == CellKind::Micro && c.mode == ModeLabel::Sleeping)
            .count();
        match snapshot_to_instance(s, &scenario).and_then(|inst| solve_exact(&inst)) {
            Ok(sol) => {
                if sleeping <= sol.z_star {
                    ok += 1;
                }
                gap_sum += sol.z_star as f64 - sleeping as f64;
            }
            Err(_) => errors += 1,
        }
    }
    let n = frozen.len();
    outcome(
        n >= 50 && ok == n && errors == 0,
        format!(
            "{ok}/{n} snapshots within z_star, mean gap {:.2} MICROs, {errors} oracle errors",
            gap_sum / n.max(1) as f64
        ),
    )
}

fn power_anchors() -> Outcome {
    let sc = builtin_default_scenario(1);
    let micro = sc.cells.iter().find(|c| c.kind == CellKind::Micro).expect("a MICRO");
    let macro_ = sc.cells.iter().find(|c| c.kind == CellKind::Macro).expect("a MACRO");
    let asleep = CellMode {
        mode: Mode::Sleeping,
        last_on_at: 0.0,
    };
    let sleep_w = cell_power(micro, &asleep, 0.0, sc.power.idle_fraction);
    let full_w = cell_power(macro_, &CellMode::active(), 1.0, sc.power.idle_fraction);
    let mut mode = CellMode::active().switch_off(micro).expect("MICRO can switch off");
    for _ in 0..10 {
        mode = step_mode(micro, mode, 1.0, true).expect("MICRO ramps");
    }
    let offset = mode.tx_offset_db(micro);
    outcome(
        sleep_w == 8.0 && full_w == 379.0 && offset == -30.0,
        format!("sleeping MICRO {sleep_w} W, loaded MACRO {full_w} W, offset after 10 s {offset} dB"),
    )
}

fn campaign(dir: &Path) -> Result<Vec<SummaryRow>, String> {
    let mut spec = CampaignSpec::new(dir);
    spec.seeds = vec![1, 2, 3, 4, 5];
    spec.duration_s = 7200.0;
    spec.log_mode = LogMode::AggregatedOnly;
    run_campaign(&spec).map(|r| r.summary).map_err(|e| e.to_string())
}

fn row(rows: &[SummaryRow], kind: ControllerKind, seed: u64) -> Option<&SummaryRow> {
    rows.iter().find(|r| r.controller == kind && r.seed == seed)
}

fn power_ordering(rows: &[SummaryRow]) -> Outcome {
    let mut ok = 0;
    let mut parts = Vec::new();
    for seed in 1..=5 {
        let (Some(a), Some(h), Some(y)) = (
            row(rows, ControllerKind::AllOn, seed),
            row(rows, ControllerKind::Heuristic, seed),
            row(rows, ControllerKind::Hybrid, seed),
        ) else {
            parts.push(format!("seed {seed} missing"));
            continue;
        };
        if y.mean_power_kw < h.mean_power_kw && h.mean_power_kw < a.mean_power_kw {
            ok += 1;
        }
        parts.push(format!(
            "s{seed} {:.3}<{:.3}<{:.3}",
            y.mean_power_kw, h.mean_power_kw, a.mean_power_kw
        ));
    }
    outcome(ok == 5, format!("{ok}/5 seeds ordered hybrid<heuristic<all_on kW: {}", parts.join(", ")))
}

fn savings_and_losses(rows: &[SummaryRow]) -> Outcome {
    let mut saving_ok = 0;
    let mut heuristic_worse = 0;
    let mut parts = Vec::new();
    for seed in 1..=5 {
        let (Some(h), Some(y)) = (row(rows, ControllerKind::Heuristic, seed), row(rows, ControllerKind::Hybrid, seed)) else {
            parts.push(format!("seed {seed} missing"));
            continue;
        };
        let red = y.power_reduction_pct.unwrap_or(f64::NAN);
        let y_chg = y.throughput_change_pct.unwrap_or(f64::NAN);
        let h_chg = h.throughput_change_pct.unwrap_or(f64::NAN);
        if red >= 8.0 && y_chg >= -2.0 {
            saving_ok += 1;
        }
        if -h_chg > -y_chg {
            heuristic_worse += 1;
        }
        parts.push(format!("s{seed} hybrid -{red:.2}% kW {y_chg:+.3}% Gbps, heuristic {h_chg:+.3}% Gbps"));
    }
    outcome(
        saving_ok == 5 && heuristic_worse >= 4,
        format!(
            "hybrid saving>=8% and loss<=2% on {saving_ok}/5 seeds; heuristic loss > hybrid loss on {heuristic_worse}/5 (need 4): {}",
            parts.join("; ")
        ),
    )
}

fn fault_tolerance() -> Outcome {
    let dir = tempdir();
    let mut spec = CampaignSpec::new(dir.path());
    spec.duration_s = 1000.0;
    spec.log_mode = LogMode::AggregatedOnly;
    spec.fault = FaultProfile {
        nan_probability: 0.3,
        duplicate_probability: 0.0,
        seed: 11,
    };
    match run_single(&spec, ControllerKind::Hybrid, 1, dir.path(), &mut |_| {}) {
        Ok(r) => outcome(
            r.ticks == 1000 && r.rejected_actions == 0 && r.controller_errors == 0,
            format!(
                "{} ticks, {} commands, {} rejected, {} NaN rows dropped",
                r.ticks, r.commands, r.rejected_actions, r.nan_rows_dropped
            ),
        ),
        Err(e) => outcome(false, format!("run failed: {e}")),
    }
}

fn report(n: u8, name: &str, o: &Outcome) {
    println!("{} criterion {n} ({name}): {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut all = true;
    let mut record = |n: u8, name: &str, o: Outcome| {
        report(n, name, &o);
        all &= o.passed;
    };
    record(1, "constraint suite", constraint_suite());
    record(2, "determinism", determinism());
    record(3, "k-means oracle equivalence", kmeans_equivalence());
    record(4, "optimality gap", optimality_gap());
    record(5, "power model anchors", power_anchors());

    let dir = tempdir();
    match campaign(dir.path()) {
        Ok(rows) => {
            record(6, "power ordering", power_ordering(&rows));
            record(7, "saving and throughput", savings_and_losses(&rows));
            for r in rows.iter().filter(|r| r.seed == 1) {
                println!(
                    "info: seed 1 {} {:.3} kW {:.4} Gbps (reference all_on 4.87 / heuristic 4.53 / hybrid 4.32 kW)",
                    r.controller, r.mean_power_kw, r.mean_throughput_gbps
                );
            }
        }
        Err(e) => {
            record(6, "power ordering", outcome(false, format!("campaign failed: {e}")));
            record(7, "saving and throughput", outcome(false, format!("campaign failed: {e}")));
        }
    }
    record(8, "fault tolerance", fault_tolerance());
    println!("acceptance finished in {:.0} s", started.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
