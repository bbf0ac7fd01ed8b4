//! Where the heterogeneous production puts the system locally inside the
//! classical Turing region.

use serde::Serialize;
use serde_json::json;

use super::{header, ExperimentConfig, ExperimentKind, ExperimentReport, Table};
use crate::error::Result;
use crate::model::{Kinetics, ModelSpec};
use crate::stability::{flagged_intervals, turing_region_local};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuringRegionRow {
    pub theta: f64,
    pub x: f64,
    pub production_u: f64,
    pub production_v: f64,
    pub turing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionClassification {
    pub theta: f64,
    /// Flagged intervals as `[x_first, x_last]` over the samples.
    pub intervals: Vec<[f64; 2]>,
    /// Distances between consecutive flagged intervals.
    pub gaps: Vec<f64>,
    pub flagged_fraction: f64,
}

impl RegionClassification {
    pub fn widest_gap(&self) -> Option<f64> {
        self.gaps.iter().copied().reduce(f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct TuringRegionResult {
    pub config: ExperimentConfig,
    pub rows: Vec<TuringRegionRow>,
    pub classes: Vec<RegionClassification>,
}

/// Classifies `x` on `samples` equispaced points for one amplitude.
pub fn classify(model: &ModelSpec, theta: f64, samples: usize) -> (Vec<TuringRegionRow>, RegionClassification) {
    let xs: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
    let rows: Vec<TuringRegionRow> = xs
        .iter()
        .map(|&x| {
            let p = model.local_production(x, theta);
            TuringRegionRow {
                theta,
                x,
                production_u: p,
                production_v: second_production(model, p),
                turing: turing_region_local(model, x, theta),
            }
        })
        .collect();
    let flags: Vec<bool> = rows.iter().map(|r| r.turing).collect();
    let spans = flagged_intervals(&flags);
    let intervals: Vec<[f64; 2]> = spans.iter().map(|&(a, b)| [xs[a], xs[b]]).collect();
    let gaps = intervals.windows(2).map(|w| w[1][0] - w[0][1]).collect();
    let flagged_fraction = flags.iter().filter(|f| **f).count() as f64 / samples as f64;
    (rows, RegionClassification { theta, intervals, gaps, flagged_fraction })
}

// η = 1 - β for Schnakenberg; the Gierer-Meinhardt inhibitor has no source.
fn second_production(model: &ModelSpec, p: f64) -> f64 {
    match model.kinetics() {
        Kinetics::Schnakenberg { .. } => 1.0 - p,
        Kinetics::GiererMeinhardt { .. } => 0.0,
    }
}

pub fn run_turing_region(config: &ExperimentConfig) -> Result<TuringRegionResult> {
    let model = config.model.to_spec()?;
    let thetas = if config.turing_region.thetas.is_empty() {
        vec![config.model.theta]
    } else {
        config.turing_region.thetas.clone()
    };
    let mut rows = Vec::new();
    let mut classes = Vec::new();
    for t in thetas {
        let (r, c) = classify(&model, t, config.turing_region.samples);
        rows.extend(r);
        classes.push(c);
    }
    Ok(TuringRegionResult { config: config.clone(), rows, classes })
}

impl TuringRegionResult {
    pub fn report(&self) -> Result<ExperimentReport> {
        let mut summary = header(ExperimentKind::TuringRegion, &self.config);
        summary["regions"] = json!(self.classes);
        Ok(ExperimentReport::new(
            ExperimentKind::TuringRegion,
            summary,
            vec![Table::from_rows("turing_region.csv", &self.rows)?],
            0,
        ))
    }
}
