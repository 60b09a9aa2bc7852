use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use esran::baseline::{BaselineConfig, BaselineXapp};
use esran::campaign::{self, CampaignSpec, ControllerKind, ScenarioSource};
use esran::oracle::{check_solution, solve_exact, StaticInstance};
use esran::scenario::{builtin_default_scenario, load_scenario};
use esran::service::client::HttpRicClient;
use esran::service::fault::FaultProfile;
use esran::service::http::{self, BIND_ENV, DEFAULT_BIND};
use esran::service::logs::LogMode;
use esran::service::{Pacing, RicService, ServiceConfig};
use esran::xapp::{Controller, HybridXapp, XappConfig};

#[derive(Parser)]
#[command(name = "esran", version, about = "RAN energy-saving testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogArg {
    Full,
    Aggregated,
}

impl From<LogArg> for LogMode {
    fn from(v: LogArg) -> Self {
        match v {
            LogArg::Full => LogMode::Full,
            LogArg::Aggregated => LogMode::AggregatedOnly,
        }
    }
}

#[derive(clap::Args, Clone)]
struct FaultArgs {
    /// Probability that a numeric KPM field is served as "NaN".
    #[arg(long, default_value_t = 0.0)]
    nan_probability: f64,
    /// Probability that a KPM row is served twice.
    #[arg(long, default_value_t = 0.0)]
    duplicate_probability: f64,
    #[arg(long, default_value_t = 0)]
    fault_seed: u64,
}

impl FaultArgs {
    fn profile(&self) -> FaultProfile {
        FaultProfile {
            nan_probability: self.nan_probability,
            duplicate_probability: self.duplicate_probability,
            seed: self.fault_seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every controller over every seed and write logs and summaries.
    Run {
        /// Scenario document; the built-in layout is generated per seed if omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "all_on,heuristic,hybrid")]
        controllers: Vec<ControllerKind>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        /// Simulated seconds per run.
        #[arg(long, default_value_t = 7200.0)]
        duration: f64,
        #[arg(long, default_value = "results")]
        output_dir: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        logs: LogArg,
        /// Hybrid xApp settings as a JSON document.
        #[arg(long)]
        xapp_config: Option<PathBuf>,
        #[command(flatten)]
        fault: FaultArgs,
        /// Exit non-zero if the ordering and saving checks fail.
        #[arg(long)]
        check: bool,
    },
    /// Rebuild summary tables and time series from existing run logs.
    Summarize { output_dir: PathBuf },
    /// Solve a frozen instance exactly and print the optimum with a witness.
    Oracle { instance: PathBuf },
    /// Serve the HTTP control surface. Bind address from RAN_ES_BIND.
    Serve {
        #[arg(long, default_value = "realtime")]
        pacing: String,
        /// Simulated seconds per wall second in realtime pacing.
        #[arg(long, default_value_t = 1.0)]
        speedup: f64,
        #[arg(long, default_value = "logs")]
        log_root: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        logs: LogArg,
        #[command(flatten)]
        fault: FaultArgs,
    },
    /// Drive a served simulation with a controller over HTTP.
    Xapp {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
        #[arg(long, default_value = "hybrid")]
        controller: ControllerKind,
        /// Wall-clock seconds between iterations.
        #[arg(long, default_value_t = 5.0)]
        period: f64,
        /// Stop after this many iterations (0 runs forever).
        #[arg(long, default_value_t = 0)]
        iterations: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the built-in scenario document.
    Scenario {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run {
            scenario,
            controllers,
            seeds,
            duration,
            output_dir,
            logs,
            xapp_config,
            fault,
            check,
        } => {
            let mut spec = CampaignSpec::new(output_dir);
            if let Some(p) = scenario {
                let sc = load_scenario(&read(&p)?).map_err(|e| e.to_string())?;
                spec.scenario = ScenarioSource::Fixed(sc);
            }
            if let Some(p) = xapp_config {
                spec.xapp = serde_json::from_str::<XappConfig>(&read(&p)?).map_err(|e| e.to_string())?;
            }
            spec.controllers = controllers;
            spec.seeds = seeds;
            spec.duration_s = duration;
            spec.log_mode = logs.into();
            spec.fault = fault.profile();
            let result = campaign::run_campaign(&spec).map_err(|e| e.to_string())?;
            println!("controller,seeds,mean_power_kw,mean_throughput_gbps,power_reduction_pct,throughput_change_pct");
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
            for row in &result.table {
                println!(
                    "{},{},{:.4},{:.4},{},{}",
                    row.controller,
                    row.seeds,
                    row.mean_power_kw,
                    row.mean_throughput_gbps,
                    fmt(row.mean_power_reduction_pct),
                    fmt(row.mean_throughput_change_pct)
                );
            }
            if check {
                let checks = campaign::check_campaign(&result.summary);
                let mut ok = !checks.is_empty();
                for c in &checks {
                    println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                    ok &= c.passed;
                }
                let rejected: u64 = result.runs.iter().map(|r| r.rejected_actions).sum();
                println!("{} rejected actions: {rejected}", if rejected == 0 { "PASS" } else { "FAIL" });
                if !ok || rejected > 0 {
                    return Ok(ExitCode::from(2));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Summarize { output_dir } => {
            let rows = campaign::summarize(&output_dir).map_err(|e| e.to_string())?;
            for kind in ControllerKind::ALL {
                if rows.iter().any(|r| r.controller == kind) {
                    campaign::emit_timeseries(&output_dir, kind).map_err(|e| e.to_string())?;
                }
            }
            for row in campaign::table(&rows) {
                println!("{}", serde_json::to_string(&row).map_err(|e| e.to_string())?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { instance } => {
            let inst: StaticInstance = serde_json::from_str(&read(&instance)?).map_err(|e| e.to_string())?;
            let sol = solve_exact(&inst).map_err(|e| e.to_string())?;
            let problems = check_solution(&inst, &sol);
            if !problems.is_empty() {
                return Err(format!("witness check failed: {}", problems.join("; ")));
            }
            println!("{}", serde_json::to_string_pretty(&sol).map_err(|e| e.to_string())?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            pacing,
            speedup,
            log_root,
            logs,
            fault,
        } => {
            let pacing = match pacing.as_str() {
                "manual" => Pacing::Manual,
                "realtime" => Pacing::Realtime { speedup },
                other => return Err(format!("unknown pacing `{other}` (manual or realtime)")),
            };
            let profile = fault.profile();
            profile.validate()?;
            let service = RicService::new(ServiceConfig {
                log_root: Some(log_root),
                log_mode: logs.into(),
                fault: profile,
                pacing,
                ..Default::default()
            });
            let bind = std::env::var(BIND_ENV).unwrap_or_else(|_| DEFAULT_BIND.to_string());
            serve(service, &bind).map_err(|e| format!("{bind}: {e}"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Xapp {
            url,
            controller,
            period,
            iterations,
            seed,
        } => {
            let mut client = HttpRicClient::new(&url, Duration::from_secs(10));
            let mut ctl: Box<dyn Controller> = match controller {
                ControllerKind::Hybrid => Box::new(HybridXapp::new(XappConfig {
                    seed,
                    ..Default::default()
                })),
                ControllerKind::Heuristic => Box::new(BaselineXapp::new(BaselineConfig {
                    seed,
                    ..Default::default()
                })),
                ControllerKind::AllOn => return Ok(ExitCode::SUCCESS),
            };
            let mut n = 0;
            println!("timestamp,cell_id,action,rule");
            while iterations == 0 || n < iterations {
                let it = ctl.iterate(&mut client);
                for c in &it.commands {
                    println!("{},{},{},{}", c.timestamp, c.cell_id, c.action.as_str(), c.rule);
                }
                n += 1;
                std::thread::sleep(Duration::from_secs_f64(period.max(0.0)));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenario { seed } => {
            println!("{}", builtin_default_scenario(seed).to_json());
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[tokio::main]
async fn serve(service: RicService, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let svc = service.clone();
    http::serve(service, listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    if let Some(id) = svc.current_id() {
        let _ = svc.stop(&id);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
