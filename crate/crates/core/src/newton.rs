//! Damped Newton iteration for `Φ(u; p) = 0`.
//!
//! Failure is reported through [`NewtonReport::converged`] rather than as an
//! error so callers can treat it as evidence (for example of a fold).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StateVector;
use crate::model::ModelSpec;
use crate::problem::{RdProblem, SteadyProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSettings {
    /// Residual ∞-norm threshold. Raised to the problem's rounding floor
    /// when that is larger.
    pub abs_tol: f64,
    pub max_iters: usize,
    /// Backtracking factor.
    pub damping: f64,
    pub min_step: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { abs_tol: 1e-10, max_iters: 25, damping: 0.5, min_step: 1e-4 }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || self.max_iters == 0 {
            return Err(Error::InvalidSettings("newton needs abs_tol > 0 and max_iters >= 1".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) || !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::InvalidSettings("newton damping must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Result of a solve on a generic problem.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub values: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub jacobian_condition_estimate: f64,
    /// Residual norm before each iteration, and after the last.
    pub residual_history: Vec<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub state: StateVector,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual_norm: f64,
    pub jacobian_condition_estimate: f64,
    pub residual_history: Vec<f64>,
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn residual_norm<P: SteadyProblem + ?Sized>(problem: &P, u: &[f64], p: f64) -> f64 {
    match problem.residual(u, p) {
        Ok(r) => {
            let n = norm_inf(&r);
            if n.is_finite() {
                n
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Newton with backtracking on the residual ∞-norm.
pub fn solve<P: SteadyProblem + ?Sized>(
    problem: &P,
    seed: &[f64],
    p: f64,
    settings: &NewtonSettings,
) -> NewtonReport {
    let mut u = seed.to_vec();
    let mut report = NewtonReport {
        values: Vec::new(),
        converged: false,
        iterations: 0,
        final_residual_norm: f64::INFINITY,
        jacobian_condition_estimate: f64::INFINITY,
        residual_history: Vec::new(),
        failure: None,
    };
    if u.len() != problem.dim() || !u.iter().all(|x| x.is_finite()) {
        report.failure = Some("seed is not finite or has the wrong length".into());
        report.values = u;
        return report;
    }
    let mut r = match problem.residual(&u, p) {
        Ok(r) => r,
        Err(e) => {
            report.failure = Some(e.to_string());
            report.values = u;
            return report;
        }
    };
    let mut rn = norm_inf(&r);
    report.residual_history.push(rn);
    let tol = settings.abs_tol.max(problem.roundoff_floor(&u));
    let mut last_cond = None;
    while rn > tol && rn.is_finite() && report.iterations < settings.max_iters {
        let lu = match problem.jacobian(&u, p).and_then(|j| j.lu()) {
            Ok(lu) => lu,
            Err(e) => {
                report.failure = Some(e.to_string());
                break;
            }
        };
        last_cond = Some(lu.condition_estimate());
        let delta = lu.solve(&r);
        if !delta.iter().all(|x| x.is_finite()) {
            report.failure = Some("non-finite Newton step".into());
            break;
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda >= settings.min_step {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a - lambda * d).collect();
            let tn = residual_norm(problem, &trial, p);
            if tn < rn * (1.0 - 1e-4 * lambda) {
                accepted = Some((trial, tn));
                break;
            }
            lambda *= settings.damping;
        }
        report.iterations += 1;
        match accepted {
            Some((trial, tn)) => {
                u = trial;
                rn = tn;
                report.residual_history.push(rn);
                // Already evaluated inside the line search, but cheap to redo.
                r = match problem.residual(&u, p) {
                    Ok(r) => r,
                    Err(e) => {
                        report.failure = Some(e.to_string());
                        break;
                    }
                };
            }
            None => {
                report.failure = Some("line search stalled".into());
                break;
            }
        }
    }
    report.converged = rn <= tol;
    if !report.converged && report.failure.is_none() {
        report.failure = Some(format!("no convergence after {} iterations", report.iterations));
    }
    report.final_residual_norm = rn;
    report.jacobian_condition_estimate = match last_cond {
        Some(c) => c,
        None => problem
            .jacobian(&u, p)
            .and_then(|j| j.lu())
            .map(|lu| lu.condition_estimate())
            .unwrap_or(f64::INFINITY),
    };
    report.values = u;
    report
}

/// Solves the reaction-diffusion steady state at amplitude `theta`.
pub fn newton_solve(
    model: &ModelSpec,
    seed: &StateVector,
    theta: f64,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome> {
    settings.validate()?;
    let problem = RdProblem::theta(*model, seed.grid());
    let rep = solve(&problem, seed.values(), theta, settings);
    Ok(NewtonOutcome {
        state: StateVector::new(seed.grid(), rep.values)?,
        converged: rep.converged,
        iterations: rep.iterations,
        final_residual_norm: rep.final_residual_norm,
        jacobian_condition_estimate: rep.jacobian_condition_estimate,
        residual_history: rep.residual_history,
    })
}
