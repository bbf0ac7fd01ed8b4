//! Time integration from a perturbed uniform state at gamma = 1, then Newton
//! polish and a stability check.

use hetturing::experiments::simulate::simulate_model;
use hetturing::experiments::{ExperimentConfig, ModelConfig};
use hetturing::integrator::Perturbation;

fn main() -> hetturing::Result<()> {
    let config = ExperimentConfig { model: ModelConfig::schnakenberg(0.8, 1.0), ..Default::default() };
    let model = config.model.to_spec()?;
    let (run, polish, verdict) = simulate_model(&config, &model, Perturbation { seed: 7, ..Default::default() })?;
    println!("converged {} at t = {:.2} after {} steps", run.converged, run.time, run.steps);
    let state = match &polish {
        Some(p) if p.converged => {
            println!("polished, residual {:.2e}", p.final_residual_norm);
            &p.state
        }
        _ => &run.state,
    };
    println!("u in [{:.5}, {:.5}]", state.min_u(), state.max_u());
    if let Some(v) = verdict {
        println!("stable {} (leading {:.4})", v.stable, v.leading_real());
    }
    Ok(())
}
