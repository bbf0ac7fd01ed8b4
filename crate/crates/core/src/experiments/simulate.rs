//! Time integration from a perturbed uniform state, then Newton polish.

use serde_json::json;

use super::{header, num, ExperimentConfig, ExperimentKind, ExperimentReport, Table};
use crate::error::Result;
use crate::grid::StateVector;
use crate::integrator::{evolve_to_steady, perturbed_uniform, IntegrationOutcome, Perturbation};
use crate::newton::{newton_solve, NewtonOutcome};
use crate::stability::{stability_verdict, StabilityVerdict};
use crate::discretization::assemble_jacobian;
use crate::model::ModelSpec;

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub config: ExperimentConfig,
    pub integration: IntegrationOutcome,
    pub polished: Option<NewtonOutcome>,
    pub verdict: Option<StabilityVerdict>,
}

impl SimulationResult {
    /// The polished state when polishing converged, else the integrated one.
    pub fn final_state(&self) -> &StateVector {
        match &self.polished {
            Some(p) if p.converged => &p.state,
            _ => &self.integration.state,
        }
    }

    fn failed(&self) -> bool {
        !self.integration.converged || self.polished.as_ref().is_some_and(|p| !p.converged)
    }

    pub fn report(&self) -> Result<ExperimentReport> {
        let mut summary = header(ExperimentKind::Simulate, &self.config);
        let s = self.final_state();
        summary["integration"] = json!({
            "converged": self.integration.converged,
            "time": num(self.integration.time),
            "steps": self.integration.steps,
            "rate": num(self.integration.rate),
        });
        summary["polish"] = match &self.polished {
            Some(p) => json!({
                "converged": p.converged,
                "iterations": p.iterations,
                "residual": num(p.final_residual_norm),
            }),
            None => json!(null),
        };
        summary["stability"] = match &self.verdict {
            Some(v) => json!({
                "stable": v.stable,
                "leading_real": num(v.leading_real()),
                "leading_imag": num(v.leading_eigenvalues[0].im),
            }),
            None => json!(null),
        };
        summary["max_u"] = num(s.max_u());
        summary["min_u"] = num(s.min_u());
        Ok(ExperimentReport::new(
            ExperimentKind::Simulate,
            summary,
            vec![Table { name: "state.csv".into(), csv: s.to_csv_string() }],
            usize::from(self.failed()),
        ))
    }
}

/// Integrates, polishes and classifies one state of `model`.
pub fn simulate_model(
    config: &ExperimentConfig,
    model: &ModelSpec,
    perturbation: Perturbation,
) -> Result<(IntegrationOutcome, Option<NewtonOutcome>, Option<StabilityVerdict>)> {
    let grid = config.numerics.grid_for(model)?;
    let theta = model.theta();
    let init = perturbed_uniform(model, grid, perturbation)?;
    let integration = evolve_to_steady(model, &init, theta, &config.numerics.integration)?;
    if !config.simulate.polish {
        return Ok((integration, None, None));
    }
    let polished = newton_solve(model, &integration.state, theta, &config.numerics.newton)?;
    let verdict = if polished.converged {
        let j = assemble_jacobian(model, &polished.state, theta)?;
        Some(stability_verdict(&j, 4, &config.numerics.continuation.eigen)?)
    } else {
        None
    };
    Ok((integration, Some(polished), verdict))
}

pub fn run_simulate(config: &ExperimentConfig) -> Result<SimulationResult> {
    let model = config.model.to_spec()?;
    let perturbation = Perturbation { seed: config.seed, ..config.numerics.integration.perturbation };
    let (integration, polished, verdict) = simulate_model(config, &model, perturbation)?;
    Ok(SimulationResult { config: config.clone(), integration, polished, verdict })
}
