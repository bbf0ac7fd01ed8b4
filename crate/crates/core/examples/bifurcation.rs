//! Full bifurcation run at gamma = 3.61, where the base branch closes on
//! itself, written to a temporary directory.

use hetturing::experiments::{run_bifurcation, ExperimentConfig, ModelConfig};

fn main() -> hetturing::Result<()> {
    let mut config = ExperimentConfig { model: ModelConfig::schnakenberg(0.8, 3.61), ..Default::default() };
    config.bifurcation.patterned_seeds = 1;
    let result = run_bifurcation(&config)?;
    for b in &result.branches {
        println!(
            "{:<10} {:>4} points, termination {:?}, folds {:?}",
            b.label,
            b.branch.points.len(),
            b.branch.termination,
            b.branch.folds.iter().map(|f| f.param).collect::<Vec<_>>()
        );
    }
    println!("theta+ {:?} theta- {:?} closure gap {:?}", result.theta_plus(), result.theta_minus(), result.closed_loop_gap());

    let dir = std::env::temp_dir().join("hetturing-bifurcation");
    for f in result.report()?.write(&dir)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
