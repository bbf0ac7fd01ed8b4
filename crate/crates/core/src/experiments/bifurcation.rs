//! Bifurcation diagrams in `θ`: the base branch from the uniform state and
//! patterned branches seeded by time integration at `θ = 0`.

use serde::Serialize;
use serde_json::{json, Value};

use super::simulate::simulate_model;
use super::{header, num, ExperimentConfig, ExperimentKind, ExperimentReport, Table};
use crate::continuation::{continue_branch, Branch, BranchPoint, ContinuationSettings, Termination};
use crate::error::Result;
use crate::grid::{Grid1D, StateVector};
use crate::integrator::Perturbation;
use crate::model::ModelSpec;
use crate::problem::RdProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchKind {
    Base,
    Patterned,
}

#[derive(Debug, Clone)]
pub struct BranchRecord {
    pub label: String,
    pub kind: BranchKind,
    pub direction: f64,
    pub branch: Branch,
}

impl BranchRecord {
    /// Maximal runs of equal stability as `(param_start, param_end, stable)`.
    pub fn stability_segments(&self) -> Vec<(f64, f64, Option<bool>)> {
        let mut out: Vec<(f64, f64, Option<bool>)> = Vec::new();
        for p in &self.branch.points {
            match out.last_mut() {
                Some(seg) if seg.2 == p.stable => seg.1 = p.param,
                _ => out.push((p.param, p.param, p.stable)),
            }
        }
        out
    }

    fn summary(&self) -> Value {
        let b = &self.branch;
        let first = b.points.first();
        let last = b.points.last();
        json!({
            "label": self.label,
            "kind": self.kind,
            "direction": self.direction,
            "points": b.points.len(),
            "termination": b.termination,
            "folds": b.folds.iter().map(|f| json!({
                "param": num(f.param),
                "max_u": num(max_u(&f.state)),
                "detection": f.detection,
            })).collect::<Vec<_>>(),
            "start": first.map(|p| json!({"param": num(p.param), "max_u": num(max_u(&p.state)), "stable": p.stable})),
            "end": last.map(|p| json!({"param": num(p.param), "max_u": num(max_u(&p.state)), "stable": p.stable})),
            "stability_segments": self.stability_segments().iter()
                .map(|s| json!({"from": num(s.0), "to": num(s.1), "stable": s.2}))
                .collect::<Vec<_>>(),
        })
    }
}

fn max_u(state: &[f64]) -> f64 {
    state[..state.len() / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_u(state: &[f64]) -> f64 {
    state[..state.len() / 2].iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Serialize)]
struct BranchRow<'a> {
    branch: &'a str,
    index: usize,
    theta: f64,
    max_u: f64,
    min_u: f64,
    leading_real: Option<f64>,
    leading_imag: Option<f64>,
    stable: Option<bool>,
    tangent_theta: f64,
    arclength: f64,
    fold_since_previous: bool,
}

#[derive(Debug, Clone)]
pub struct BifurcationResult {
    pub config: ExperimentConfig,
    pub model: ModelSpec,
    pub grid: Grid1D,
    pub branches: Vec<BranchRecord>,
    /// Patterned seeds that were rejected, with the reason.
    pub rejected_seeds: Vec<(u64, String)>,
}

impl BifurcationResult {
    pub fn base(&self, direction: f64) -> Option<&BranchRecord> {
        self.branches.iter().find(|b| b.kind == BranchKind::Base && b.direction == direction)
    }

    pub fn patterned(&self) -> impl Iterator<Item = &BranchRecord> {
        self.branches.iter().filter(|b| b.kind == BranchKind::Patterned)
    }

    /// First fold of the base branch towards positive `θ`.
    pub fn theta_plus(&self) -> Option<f64> {
        self.base(1.0).and_then(|b| b.branch.first_fold()).map(|f| f.param)
    }

    pub fn theta_minus(&self) -> Option<f64> {
        self.base(-1.0).and_then(|b| b.branch.first_fold()).map(|f| f.param)
    }

    /// Closure gap of a base branch that came back to the uniform state.
    pub fn closed_loop_gap(&self) -> Option<f64> {
        self.branches
            .iter()
            .filter(|b| b.kind == BranchKind::Base)
            .find_map(|b| match b.branch.termination {
                Termination::ClosedLoop { gap } => Some(gap),
                _ => None,
            })
    }

    fn failures(&self) -> usize {
        self.branches.iter().filter(|b| b.branch.is_unresolved()).count()
    }

    pub fn report(&self) -> Result<ExperimentReport> {
        let mut rows = Vec::new();
        for rec in &self.branches {
            let flags = rec.branch.fold_flags();
            for (i, p) in rec.branch.points.iter().enumerate() {
                rows.push(BranchRow {
                    branch: &rec.label,
                    index: i,
                    theta: p.param,
                    max_u: max_u(&p.state),
                    min_u: min_u(&p.state),
                    leading_real: p.leading_eigenvalue.map(|l| l.re),
                    leading_imag: p.leading_eigenvalue.map(|l| l.im),
                    stable: p.stable,
                    tangent_theta: p.tangent_param_component,
                    arclength: p.arclength,
                    fold_since_previous: flags[i],
                });
            }
        }
        #[derive(Serialize)]
        struct FoldRow<'a> {
            branch: &'a str,
            theta: f64,
            max_u: f64,
        }
        let folds: Vec<FoldRow> = self
            .branches
            .iter()
            .flat_map(|r| r.branch.folds.iter().map(move |f| FoldRow { branch: &r.label, theta: f.param, max_u: max_u(&f.state) }))
            .collect();
        let mut summary = header(ExperimentKind::Bifurcation, &self.config);
        summary["n_points"] = json!(self.grid.n_points());
        summary["theta_plus"] = self.theta_plus().map_or(Value::Null, num);
        summary["theta_minus"] = self.theta_minus().map_or(Value::Null, num);
        summary["closed_loop"] = json!(self.closed_loop_gap().is_some());
        summary["closure_gap"] = self.closed_loop_gap().map_or(Value::Null, num);
        summary["branches"] = json!(self.branches.iter().map(|b| b.summary()).collect::<Vec<_>>());
        summary["rejected_seeds"] =
            json!(self.rejected_seeds.iter().map(|(s, r)| json!({"seed": s, "reason": r})).collect::<Vec<_>>());
        Ok(ExperimentReport::new(
            ExperimentKind::Bifurcation,
            summary,
            vec![Table::from_rows("branches.csv", &rows)?, Table::from_rows("folds.csv", &folds)?],
            self.failures(),
        ))
    }
}

fn settings_for(config: &ExperimentConfig, direction: f64, closure: bool) -> ContinuationSettings {
    let o = &config.bifurcation;
    ContinuationSettings {
        param_min: o.theta_min,
        param_max: o.theta_max,
        direction,
        detect_closure: closure,
        newton: config.numerics.newton,
        ..config.numerics.continuation.clone()
    }
}

/// Base branch in one or both directions, then patterned branches.
pub fn run_bifurcation(config: &ExperimentConfig) -> Result<BifurcationResult> {
    let model = config.model.to_spec()?.with_theta(0.0);
    let grid = config.numerics.grid_for(&model)?;
    let problem = RdProblem::theta(model, grid);
    let uniform = StateVector::uniform(grid, model.uniform_steady_state()?);
    let o = &config.bifurcation;

    let mut directions = vec![1.0];
    if o.bidirectional {
        directions.push(-1.0);
    }
    let mut jobs: Vec<(String, BranchKind, f64, Vec<f64>)> = directions
        .iter()
        .map(|&d| (format!("base{}", sign(d)), BranchKind::Base, d, uniform.values().to_vec()))
        .collect();

    let mut rejected = Vec::new();
    let mut patterns: Vec<StateVector> = Vec::new();
    for i in 0..o.patterned_seeds as u64 {
        let seed = config.seed.wrapping_add(i);
        let pert = Perturbation { seed, ..config.numerics.integration.perturbation };
        let reason = match simulate_model(config, &model, pert) {
            Err(e) => Some(e.to_string()),
            Ok((integ, polished, verdict)) => match polished {
                _ if !integ.converged => Some("time integration did not reach a steady state".into()),
                Some(p) if p.converged => {
                    if p.state.distance_inf(&uniform) < 1e-6 {
                        Some("returned to the uniform state".into())
                    } else if patterns.iter().any(|q| q.distance_inf(&p.state) < 1e-6) {
                        Some("duplicate of an earlier seed".into())
                    } else if !verdict.as_ref().is_some_and(|v| v.stable) {
                        Some("polished state is not stable".into())
                    } else {
                        patterns.push(p.state);
                        None
                    }
                }
                _ => Some("Newton polish failed".into()),
            },
        };
        if let Some(r) = reason {
            rejected.push((seed, r));
        }
    }
    for (k, p) in patterns.iter().enumerate() {
        for &d in &directions {
            jobs.push((format!("pattern{k}{}", sign(d)), BranchKind::Patterned, d, p.values().to_vec()));
        }
    }

    let traced: Vec<Result<BranchRecord>> = super::with_pool(config, || {
        use rayon::prelude::*;
        jobs.into_par_iter()
            .map(|(label, kind, direction, state)| {
                let s = settings_for(config, direction, o.detect_closure);
                let branch = continue_branch(&problem, BranchPoint::new(0.0, state), &s)?;
                Ok(BranchRecord { label, kind, direction, branch })
            })
            .collect()
    })?;
    let branches = traced.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BifurcationResult { config: config.clone(), model, grid, branches, rejected_seeds: rejected })
}

fn sign(d: f64) -> &'static str {
    if d > 0.0 {
        "+"
    } else {
        "-"
    }
}
