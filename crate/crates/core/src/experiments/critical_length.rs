//! Critical domain length `L_c = √γ_c` of the heterogeneous base state.
//!
//! Stage one continues the uniform state in `θ` at `γ` just below the
//! homogeneous threshold `γ_c0`. Stage two continues that base state in `γ`,
//! upwards if it is stable and downwards otherwise, until the leading
//! eigenvalue crosses zero. The crossing is then bisected in `γ`.

use serde::Serialize;
use serde_json::json;

use super::{header, ExperimentConfig, ExperimentKind, ExperimentReport, Table};
use crate::continuation::{continue_branch, Branch, BranchPoint, ContinuationSettings, Termination};
use crate::discretization::Discretization;
use crate::error::Result;
use crate::grid::{Grid1D, StateVector};
use crate::model::ModelSpec;
use crate::newton;
use crate::problem::RdProblem;
use crate::stability::{critical_gamma, stability_verdict, EigenSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalStatus {
    Found,
    /// No stability change within the `γ` bounds, or no homogeneous window.
    NotFound,
    /// The first stage folded before reaching the target `θ`.
    BaseStateLost,
    /// Continuation gave up.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalLengthRow {
    pub theta: f64,
    pub param: String,
    pub value: f64,
    pub gamma_c0: Option<f64>,
    pub mode: Option<usize>,
    pub gamma_c: Option<f64>,
    pub length: Option<f64>,
    pub status: CriticalStatus,
    /// Direction of the second stage: +1 up in `γ`, -1 down.
    pub direction: Option<f64>,
    pub note: String,
}

impl CriticalLengthRow {
    pub fn homogeneous_length(&self) -> Option<f64> {
        self.gamma_c0.map(f64::sqrt)
    }
}

/// Runs every `(θ, sweep value)` pair, in parallel, ordered by `θ` then value.
pub fn run_critical_length(config: &ExperimentConfig) -> Result<Vec<CriticalLengthRow>> {
    let (param, values) = match config.sweeps.first() {
        Some(s) => (s.param.clone(), s.values()),
        None => {
            let p = config.model.production_param().to_string();
            let v = config.model.get(&p)?;
            (p, vec![v])
        }
    };
    let jobs: Vec<(f64, f64)> =
        config.critical_length.thetas.iter().flat_map(|&t| values.iter().map(move |&v| (t, v))).collect();
    let rows = super::with_pool(config, || {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(theta, value)| {
                critical_length_cell(config, &param, value, theta).unwrap_or_else(|e| CriticalLengthRow {
                    theta,
                    param: param.clone(),
                    value,
                    gamma_c0: None,
                    mode: None,
                    gamma_c: None,
                    length: None,
                    status: CriticalStatus::Unresolved,
                    direction: None,
                    note: e.to_string(),
                })
            })
            .collect::<Vec<_>>()
    })?;
    Ok(rows)
}

/// One `(θ, value)` pair.
pub fn critical_length_cell(config: &ExperimentConfig, param: &str, value: f64, theta: f64) -> Result<CriticalLengthRow> {
    let o = &config.critical_length;
    let mc = config.model.with(param, value)?;
    let mut row = CriticalLengthRow {
        theta,
        param: param.to_string(),
        value,
        gamma_c0: None,
        mode: None,
        gamma_c: None,
        length: None,
        status: CriticalStatus::NotFound,
        direction: None,
        note: String::new(),
    };
    let homogeneous = mc.to_spec()?.with_theta(0.0);
    let Some((gc0, mode)) = critical_gamma(&homogeneous, o.max_mode)? else {
        row.note = "homogeneous system has no Turing window".into();
        return Ok(row);
    };
    row.gamma_c0 = Some(gc0);
    row.mode = Some(mode);

    let gamma1 = gc0 * (1.0 - o.stage1_offset);
    let model = homogeneous.with_gamma(gamma1)?;
    let grid = config.numerics.grid_for(&model)?;
    let base = match stage_one(config, &model, grid, theta)? {
        Ok(state) => state,
        Err((status, note)) => {
            row.status = status;
            row.note = note;
            return Ok(row);
        }
    };

    let model = model.with_theta(theta);
    let problem = RdProblem::gamma(model, grid);
    let eigen = config.numerics.continuation.eigen;
    let jac = Discretization::new(model, grid).jacobian_at_gamma(&base, gamma1)?;
    let stable = stability_verdict(&jac, 2, &eigen)?.stable;
    let direction = if stable { 1.0 } else { -1.0 };
    row.direction = Some(direction);
    let settings = ContinuationSettings {
        param_min: o.gamma_min.min(gamma1),
        param_max: o.gamma_max.max(gamma1),
        direction,
        track_stability: true,
        stop_on_stability_change: true,
        stop_at_first_fold: false,
        detect_closure: false,
        newton: config.numerics.newton,
        ..config.numerics.continuation.clone()
    };
    let branch = continue_branch(&problem, BranchPoint::new(gamma1, base), &settings)?;
    match branch.termination {
        Termination::StabilityChange { .. } => {
            let gc = locate_crossing(&problem, &branch, &settings, o.gamma_tol);
            row.gamma_c = Some(gc);
            row.length = Some(gc.sqrt());
            row.status = CriticalStatus::Found;
        }
        Termination::Unresolved { param, ref reason } => {
            row.status = CriticalStatus::Unresolved;
            row.note = format!("stage two stopped at gamma = {param}: {reason}");
        }
        Termination::MaxPoints => {
            row.status = CriticalStatus::Unresolved;
            row.note = "stage two hit max_points".into();
        }
        _ => {
            row.note = format!("no stability change for gamma in [{}, {}]", settings.param_min, settings.param_max);
        }
    }
    Ok(row)
}

type StageOne = std::result::Result<Vec<f64>, (CriticalStatus, String)>;

fn stage_one(config: &ExperimentConfig, model: &ModelSpec, grid: Grid1D, theta: f64) -> Result<StageOne> {
    let u0 = StateVector::uniform(grid, model.uniform_steady_state()?).into_values();
    if theta == 0.0 {
        return Ok(Ok(u0));
    }
    let settings = ContinuationSettings {
        param_min: theta.min(0.0),
        param_max: theta.max(0.0),
        direction: theta.signum(),
        stop_at_first_fold: true,
        track_stability: false,
        detect_closure: false,
        newton: config.numerics.newton,
        ..config.numerics.continuation.clone()
    };
    let problem = RdProblem::theta(*model, grid);
    let b = continue_branch(&problem, BranchPoint::new(0.0, u0), &settings)?;
    Ok(match b.termination {
        Termination::ParamLimit { param } if param == theta => Ok(b.points.last().expect("nonempty").state.clone()),
        Termination::Fold { param } => Err((CriticalStatus::BaseStateLost, format!("stage one folded at theta = {param}"))),
        ref t => Err((CriticalStatus::Unresolved, format!("stage one ended with {t:?}"))),
    })
}

/// Bisects the sign change of the leading eigenvalue between the last two
/// points. A fold inside the bracket is itself the crossing.
fn locate_crossing(problem: &RdProblem, branch: &Branch, settings: &ContinuationSettings, tol: f64) -> f64 {
    let n = branch.points.len();
    let (a, b) = (&branch.points[n - 2], &branch.points[n - 1]);
    if a.tangent_param_component * b.tangent_param_component < 0.0 {
        if let Some(f) = branch.folds.last() {
            return f.param;
        }
    }
    let lead = |u: &[f64], g: f64| -> Option<f64> {
        let jac = problem.discretization().jacobian_at_gamma(u, g).ok()?;
        let e: EigenSettings = settings.eigen;
        stability_verdict(&jac, 2, &e).ok().map(|v| v.leading_real())
    };
    let (mut ga, mut ua, mut la) = (a.param, a.state.clone(), a.leading_eigenvalue_real().unwrap_or(f64::NAN));
    let (mut gb, mut ub, mut lb) = (b.param, b.state.clone(), b.leading_eigenvalue_real().unwrap_or(f64::NAN));
    while (gb - ga).abs() > tol {
        let gm = 0.5 * (ga + gb);
        let seed: Vec<f64> = ua.iter().zip(&ub).map(|(x, y)| 0.5 * (x + y)).collect();
        let rep = newton::solve(problem, &seed, gm, &settings.newton);
        if !rep.converged {
            break;
        }
        let Some(lm) = lead(&rep.values, gm) else { break };
        if lm * la > 0.0 {
            (ga, ua, la) = (gm, rep.values, lm);
        } else {
            (gb, ub, lb) = (gm, rep.values, lm);
        }
    }
    // Secant on the leading eigenvalue inside the final bracket.
    if la.is_finite() && lb.is_finite() && la != lb {
        let g = ga - la * (gb - ga) / (lb - la);
        if (g - ga) * (g - gb) <= 0.0 {
            return g;
        }
    }
    0.5 * (ga + gb)
}

pub(crate) fn report(config: &ExperimentConfig, rows: &[CriticalLengthRow]) -> Result<ExperimentReport> {
    let mut summary = header(ExperimentKind::CriticalLength, config);
    let count = |s: CriticalStatus| rows.iter().filter(|r| r.status == s).count();
    summary["counts"] = json!({
        "found": count(CriticalStatus::Found),
        "not_found": count(CriticalStatus::NotFound),
        "base_state_lost": count(CriticalStatus::BaseStateLost),
        "unresolved": count(CriticalStatus::Unresolved),
    });
    summary["rows"] = json!(rows);
    Ok(ExperimentReport::new(
        ExperimentKind::CriticalLength,
        summary,
        vec![Table::from_rows("critical_length.csv", rows)?],
        count(CriticalStatus::Unresolved),
    ))
}
