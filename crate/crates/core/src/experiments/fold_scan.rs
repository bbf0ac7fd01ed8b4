//! Two-parameter scans of `θ⁺`, the amplitude of the first fold on the base
//! branch, with the homogeneous instability windows overlaid.

use serde::Serialize;
use serde_json::json;

use super::{header, num, ExperimentConfig, ExperimentKind, ExperimentReport, Table};
use crate::continuation::{theta_plus, ContinuationSettings, ThetaPlus};
use crate::error::Result;
use crate::stability::gamma_instability_roots;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CellStatus {
    Fold { theta_plus: f64 },
    NoFold,
    /// Continuation gave up at this amplitude.
    Unresolved { param: f64 },
    Error { message: String },
}

impl CellStatus {
    pub fn theta_plus(&self) -> Option<f64> {
        match self {
            CellStatus::Fold { theta_plus } => Some(*theta_plus),
            _ => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, CellStatus::Unresolved { .. } | CellStatus::Error { .. })
    }

    fn label(&self) -> &'static str {
        match self {
            CellStatus::Fold { .. } => "fold",
            CellStatus::NoFold => "no-fold",
            CellStatus::Unresolved { .. } => "unresolved",
            CellStatus::Error { .. } => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub i: usize,
    pub j: usize,
    pub p1: f64,
    pub p2: f64,
    pub n_points: usize,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlayRow {
    pub param: String,
    pub value: f64,
    pub m: usize,
    pub gamma_low: Option<f64>,
    pub gamma_high: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub config: ExperimentConfig,
    pub p1_name: String,
    pub p2_name: String,
    pub p1_values: Vec<f64>,
    pub p2_values: Vec<f64>,
    /// Row-major over `(p1, p2)`.
    pub cells: Vec<ScanCell>,
    pub overlays: Vec<OverlayRow>,
}

impl ScanResult {
    pub fn cell(&self, i: usize, j: usize) -> &ScanCell {
        &self.cells[i * self.p2_values.len() + j]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.status.is_failure()).count()
    }

    /// The overlay window of mode `m` at a value of the non-`γ` parameter.
    pub fn window(&self, value: f64, m: usize) -> Option<(f64, f64)> {
        self.overlays
            .iter()
            .find(|o| o.m == m && o.value == value)
            .and_then(|o| Some((o.gamma_low?, o.gamma_high?)))
    }

    pub fn report(&self) -> Result<ExperimentReport> {
        #[derive(Serialize)]
        struct Row<'a> {
            i: usize,
            j: usize,
            p1: f64,
            p2: f64,
            n_points: usize,
            status: &'a str,
            theta_plus: Option<f64>,
            unresolved_at: Option<f64>,
        }
        let rows: Vec<Row> = self
            .cells
            .iter()
            .map(|c| Row {
                i: c.i,
                j: c.j,
                p1: c.p1,
                p2: c.p2,
                n_points: c.n_points,
                status: c.status.label(),
                theta_plus: c.status.theta_plus(),
                unresolved_at: match c.status {
                    CellStatus::Unresolved { param } => Some(param),
                    _ => None,
                },
            })
            .collect();
        let mut summary = header(ExperimentKind::FoldScan, &self.config);
        summary["p1"] = json!({"param": self.p1_name, "values": self.p1_values});
        summary["p2"] = json!({"param": self.p2_name, "values": self.p2_values});
        let count = |l: &str| self.cells.iter().filter(|c| c.status.label() == l).count();
        summary["counts"] = json!({
            "fold": count("fold"), "no_fold": count("no-fold"),
            "unresolved": count("unresolved"), "error": count("error"),
        });
        summary["failed_cells"] = json!(self
            .cells
            .iter()
            .filter(|c| c.status.is_failure())
            .map(|c| json!({"i": c.i, "j": c.j, "p1": num(c.p1), "p2": num(c.p2), "status": c.status}))
            .collect::<Vec<_>>());
        Ok(ExperimentReport::new(
            ExperimentKind::FoldScan,
            summary,
            vec![Table::from_rows("scan.csv", &rows)?, Table::from_rows("overlays.csv", &self.overlays)?],
            self.failures(),
        ))
    }
}

fn overlay_rows(config: &ExperimentConfig) -> Result<Vec<OverlayRow>> {
    let mut out = Vec::new();
    for s in config.sweeps.iter().filter(|s| s.param != "gamma") {
        for v in s.values() {
            let model = config.model.with(&s.param, v)?.to_spec()?;
            let mut modes: Vec<usize> = (1..=config.fold_scan.overlay_modes).collect();
            if s.param == "n" && v >= 1.0 {
                modes.extend([v as usize, 2 * v as usize]);
            }
            modes.sort_unstable();
            modes.dedup();
            for m in modes {
                let w = gamma_instability_roots(&model, m)?;
                out.push(OverlayRow {
                    param: s.param.clone(),
                    value: v,
                    m,
                    gamma_low: w.map(|w| w.0),
                    gamma_high: w.map(|w| w.1),
                });
            }
        }
    }
    Ok(out)
}

/// `θ⁺` for every cell of the two sweeps, in parallel, in row-major order.
pub fn run_fold_scan(config: &ExperimentConfig) -> Result<ScanResult> {
    let (s1, s2) = (&config.sweeps[0], &config.sweeps[1]);
    let (v1, v2) = (s1.values(), s2.values());
    let settings = ContinuationSettings {
        param_min: -config.fold_scan.theta_max,
        param_max: config.fold_scan.theta_max,
        direction: 1.0,
        stop_at_first_fold: true,
        track_stability: false,
        newton: config.numerics.newton,
        ..config.numerics.continuation.clone()
    };
    let jobs: Vec<(usize, usize)> = (0..v1.len()).flat_map(|i| (0..v2.len()).map(move |j| (i, j))).collect();
    let cells = super::with_pool(config, || {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(i, j)| {
                let (p1, p2) = (v1[i], v2[j]);
                let (n_points, status) = match scan_cell(config, &s1.param, p1, &s2.param, p2, &settings) {
                    Ok(r) => r,
                    Err(e) => (0, CellStatus::Error { message: e.to_string() }),
                };
                ScanCell { i, j, p1, p2, n_points, status }
            })
            .collect::<Vec<_>>()
    })?;
    Ok(ScanResult {
        config: config.clone(),
        p1_name: s1.param.clone(),
        p2_name: s2.param.clone(),
        p1_values: v1,
        p2_values: v2,
        cells,
        overlays: overlay_rows(config)?,
    })
}

/// One cell, as a standalone computation.
pub fn scan_cell(
    config: &ExperimentConfig,
    name1: &str,
    p1: f64,
    name2: &str,
    p2: f64,
    settings: &ContinuationSettings,
) -> Result<(usize, CellStatus)> {
    let model = config.model.with(name1, p1)?.with(name2, p2)?.to_spec()?;
    let grid = config.numerics.grid_for(&model)?;
    let status = match theta_plus(&model, grid, settings)? {
        ThetaPlus::Fold(t) => CellStatus::Fold { theta_plus: t },
        ThetaPlus::NoFold => CellStatus::NoFold,
        ThetaPlus::Unresolved { param } => CellStatus::Unresolved { param },
    };
    Ok((grid.n_points(), status))
}
