//! Growth rates `Λ_m(γ)` of the homogeneous problem and the per-mode windows.

use serde::Serialize;
use serde_json::json;

use super::{header, num, ExperimentConfig, ExperimentKind, ExperimentReport, Table};
use crate::error::Result;
use crate::stability::{dispersion, gamma_instability_roots};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionRow {
    pub m: usize,
    pub gamma: f64,
    pub lambda_max: f64,
    pub root_low: Option<f64>,
    pub root_high: Option<f64>,
}

/// One row per `(m, γ)` for `m = 0..=max_mode`, `γ` from the sweep or the
/// model.
pub fn run_dispersion(config: &ExperimentConfig) -> Result<Vec<DispersionRow>> {
    let gammas = match config.sweeps.first() {
        Some(s) => s.values(),
        None => vec![config.model.gamma],
    };
    let mut rows = Vec::new();
    for m in 0..=config.dispersion.max_mode {
        for &g in &gammas {
            let model = config.model.with("gamma", g)?.to_spec()?;
            let roots = if m == 0 { None } else { gamma_instability_roots(&model, m)? };
            rows.push(DispersionRow {
                m,
                gamma: g,
                lambda_max: dispersion(&model, m)?.lambda_max,
                root_low: roots.map(|r| r.0),
                root_high: roots.map(|r| r.1),
            });
        }
    }
    Ok(rows)
}

pub(crate) fn report(config: &ExperimentConfig, rows: &[DispersionRow]) -> Result<ExperimentReport> {
    let mut summary = header(ExperimentKind::Dispersion, config);
    let windows: Vec<_> = (1..=config.dispersion.max_mode)
        .filter_map(|m| rows.iter().find(|r| r.m == m))
        .map(|r| json!({"m": r.m, "root_low": r.root_low.map(num), "root_high": r.root_high.map(num)}))
        .collect();
    let unstable: Vec<_> = rows.iter().filter(|r| r.lambda_max > 0.0).map(|r| json!([r.m, r.gamma])).collect();
    summary["windows"] = json!(windows);
    summary["unstable_mode_gamma_pairs"] = json!(unstable);
    Ok(ExperimentReport::new(
        ExperimentKind::Dispersion,
        summary,
        vec![Table::from_rows("dispersion.csv", rows)?],
        0,
    ))
}
