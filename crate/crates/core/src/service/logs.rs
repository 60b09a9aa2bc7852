//! The four per-run CSV logs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::sim::{AggregatedMetrics, KpmSnapshot};

pub const CELL_REPORTS_FILE: &str = "cell_reports.csv";
pub const UE_SERVING_FILE: &str = "ue_serving.csv";
pub const UE_NEIGHBOUR_FILE: &str = "ue_neighbour.csv";
pub const AGGREGATED_FILE: &str = "aggregated.csv";

pub const CELL_REPORTS_HEADER: &str = "timestamp,cell_id,kind,mode,x,y,prb_util_pct,conn_mean,power_w,tx_offset_db";
pub const UE_SERVING_HEADER: &str =
    "timestamp,ue_id,serving_cell_id,rsrp_dbm,sinr_db,dl_throughput_mbps,demand_mbps,x,y";
pub const UE_NEIGHBOUR_HEADER: &str = "timestamp,ue_id,neighbour_cell_id,rsrp_dbm";
pub const AGGREGATED_HEADER: &str = "timestamp,total_power_w,total_dl_throughput_mbps,avg_ue_throughput_mbps,\
outage_count,heavy_macro_count,heavy_micro_count,empty_micro_count,zero_demand_ue_count,\
sleeping_micro_count,detached_ue_count";

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("log I/O failed for {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("log write failed for {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Which logs a run writes. `AggregatedOnly` keeps long campaigns small.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogMode {
    #[default]
    Full,
    AggregatedOnly,
}

struct Sink {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Sink {
    fn create(dir: &Path, name: &str, header: &str) -> Result<Self, LogError> {
        let path = dir.join(name);
        let mut file = BufWriter::new(File::create(&path).map_err(|source| LogError::Io {
            path: path.clone(),
            source,
        })?);
        writeln!(file, "{header}").map_err(|source| LogError::Io {
            path: path.clone(),
            source,
        })?;
        let writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        Ok(Self { path, writer })
    }

    fn write<T: Serialize>(&mut self, row: &T) -> Result<(), LogError> {
        self.writer.serialize(row).map_err(|source| LogError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn flush(&mut self) -> Result<(), LogError> {
        self.writer.flush().map_err(|source| LogError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

pub struct LogWriter {
    cells: Option<Sink>,
    serving: Option<Sink>,
    neighbours: Option<Sink>,
    aggregated: Sink,
}

impl LogWriter {
    pub fn create(dir: &Path, mode: LogMode) -> Result<Self, LogError> {
        std::fs::create_dir_all(dir).map_err(|source| LogError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let full = mode == LogMode::Full;
        let opt = |name, header| full.then(|| Sink::create(dir, name, header)).transpose();
        Ok(Self {
            cells: opt(CELL_REPORTS_FILE, CELL_REPORTS_HEADER)?,
            serving: opt(UE_SERVING_FILE, UE_SERVING_HEADER)?,
            neighbours: opt(UE_NEIGHBOUR_FILE, UE_NEIGHBOUR_HEADER)?,
            aggregated: Sink::create(dir, AGGREGATED_FILE, AGGREGATED_HEADER)?,
        })
    }

    pub fn write_tick(&mut self, snapshot: &KpmSnapshot, metrics: &AggregatedMetrics) -> Result<(), LogError> {
        if let Some(s) = &mut self.cells {
            for r in &snapshot.cell_reports {
                s.write(r)?;
            }
        }
        if let Some(s) = &mut self.serving {
            for r in &snapshot.ue_serving_reports {
                s.write(r)?;
            }
        }
        if let Some(s) = &mut self.neighbours {
            for r in &snapshot.ue_neighbour_reports {
                s.write(r)?;
            }
        }
        self.aggregated.write(metrics)
    }

    pub fn flush(&mut self) -> Result<(), LogError> {
        for s in [&mut self.cells, &mut self.serving, &mut self.neighbours]
            .into_iter()
            .flatten()
        {
            s.flush()?;
        }
        self.aggregated.flush()
    }
}

/// Reads an `aggregated.csv` back.
pub fn read_aggregated(path: &Path) -> Result<Vec<AggregatedMetrics>, LogError> {
    let mut r = csv::Reader::from_path(path).map_err(|source| LogError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    r.deserialize()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| LogError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

/// One line of an actions audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub timestamp: f64,
    pub cell_id: String,
    pub action: crate::sim::Action,
    pub rule: String,
}

pub const ACTIONS_FILE: &str = "actions.csv";

pub fn write_audit(path: &Path, rows: &[AuditRow]) -> Result<(), LogError> {
    let mut w = csv::Writer::from_path(path).map_err(|source| LogError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    // csv writes no header for an empty file, keep one for consumers
    if rows.is_empty() {
        w.write_record(["timestamp", "cell_id", "action", "rule"])
            .map_err(|source| LogError::Csv {
                path: path.to_path_buf(),
                source,
            })?;
    }
    for r in rows {
        w.serialize(r).map_err(|source| LogError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    w.flush().map_err(|source| LogError::Io {
        path: path.to_path_buf(),
        source,
    })
}
