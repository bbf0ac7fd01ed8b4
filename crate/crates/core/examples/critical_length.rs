//! Critical length of the base state for Schnakenberg with n = 2, against the
//! homogeneous value.

use hetturing::experiments::critical_length::critical_length_cell;
use hetturing::experiments::{ExperimentConfig, ModelConfig};

fn main() -> hetturing::Result<()> {
    let mut config = ExperimentConfig { model: ModelConfig { n: 2, ..ModelConfig::schnakenberg(0.9, 1.0) }, ..Default::default() };
    config.numerics.n_points = Some(101);
    config.numerics.continuation.max_step = 0.05;
    config.critical_length.gamma_max = 40.0;
    for theta in [0.0, 1.0 / 6.0, 1.0 / 3.0] {
        let row = critical_length_cell(&config, "beta0", 0.9, theta)?;
        println!(
            "theta {theta:.4}: {:?}, gamma_c {:?} (homogeneous {:?}), L_c {:?} {}",
            row.status, row.gamma_c, row.gamma_c0, row.length, row.note
        );
    }
    Ok(())
}
