//! Config-driven experiments and their file outputs.
//!
//! Each runner returns a typed result and an [`ExperimentReport`] holding the
//! CSV tables and a machine-readable summary. Reports are deterministic for a
//! fixed config and seed; wall-clock timings are kept apart in
//! `timings.json`.

pub mod bifurcation;
pub mod config;
pub mod critical_length;
pub mod dispersion;
pub mod fold_scan;
pub mod simulate;
pub mod turing_region;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

pub use bifurcation::{run_bifurcation, BifurcationResult, BranchKind, BranchRecord};
pub use config::{
    apply_override, auto_grid_points, ExperimentConfig, ExperimentKind, ModelConfig, ModelKind, Spacing, Sweep,
};
pub use critical_length::{run_critical_length, CriticalLengthRow, CriticalStatus};
pub use dispersion::{run_dispersion, DispersionRow};
pub use fold_scan::{run_fold_scan, CellStatus, OverlayRow, ScanCell, ScanResult};
pub use simulate::{run_simulate, SimulationResult};
pub use turing_region::{run_turing_region, TuringRegionResult};

use crate::error::{Error, Result};

/// A named CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

impl Table {
    pub fn from_rows<T: Serialize>(name: &str, rows: &[T]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(Self { name: name.into(), csv: String::from_utf8(bytes).expect("csv output is utf-8") })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub summary: Value,
    pub tables: Vec<Table>,
    /// Cells or branches that did not resolve.
    pub failures: usize,
    pub timings: BTreeMap<String, f64>,
}

impl ExperimentReport {
    fn new(kind: ExperimentKind, summary: Value, tables: Vec<Table>, failures: usize) -> Self {
        Self { kind, summary, tables, failures, timings: BTreeMap::new() }
    }

    pub fn is_partial(&self) -> bool {
        self.failures > 0
    }

    /// `summary.json`, as written.
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes every table, `summary.json` and `timings.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for t in &self.tables {
            let p = dir.join(&t.name);
            std::fs::write(&p, &t.csv)?;
            out.push(p);
        }
        let p = dir.join("summary.json");
        std::fs::write(&p, self.summary_json())?;
        out.push(p);
        let p = dir.join("timings.json");
        std::fs::write(&p, serde_json::to_string_pretty(&self.timings)? + "\n")?;
        out.push(p);
        Ok(out)
    }
}

/// Worker count: `TC_WORKERS` wins over the config, which wins over rayon's
/// default.
pub fn worker_count(config: &ExperimentConfig) -> Result<usize> {
    if let Ok(v) = std::env::var("TC_WORKERS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("TC_WORKERS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Config("TC_WORKERS must be at least 1".into()));
        }
        return Ok(n);
    }
    Ok(config.workers.unwrap_or_else(rayon::current_num_threads))
}

pub(crate) fn with_pool<T: Send>(config: &ExperimentConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config)?)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Validates the config for `kind` and runs it.
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate(kind)?;
    let start = Instant::now();
    let mut report = match kind {
        ExperimentKind::Bifurcation => run_bifurcation(config)?.report()?,
        ExperimentKind::FoldScan => run_fold_scan(config)?.report()?,
        ExperimentKind::CriticalLength => critical_length::report(config, &run_critical_length(config)?)?,
        ExperimentKind::TuringRegion => run_turing_region(config)?.report()?,
        ExperimentKind::Dispersion => dispersion::report(config, &run_dispersion(config)?)?,
        ExperimentKind::Simulate => run_simulate(config)?.report()?,
    };
    report.timings.insert("total_seconds".into(), start.elapsed().as_secs_f64());
    report.timings.insert("workers".into(), worker_count(config)? as f64);
    Ok(report)
}

/// Common summary header.
pub(crate) fn header(kind: ExperimentKind, config: &ExperimentConfig) -> Value {
    json!({
        "experiment": kind.name(),
        "model": config.model,
        "seed": config.seed,
    })
}

/// JSON number, or null for non-finite values.
pub(crate) fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}
