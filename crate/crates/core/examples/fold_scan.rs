//! A coarse beta0 x gamma scan of theta+ with the mode windows alongside.

use hetturing::experiments::{run_fold_scan, ExperimentConfig, ModelConfig, Spacing, Sweep};

fn main() -> hetturing::Result<()> {
    let config = ExperimentConfig {
        model: ModelConfig::schnakenberg(0.8, 1.0),
        sweeps: vec![Sweep::new("beta0", 0.5, 0.9, 3, Spacing::Linear), Sweep::new("gamma", 0.3, 30.0, 7, Spacing::Log)],
        ..Default::default()
    };
    let scan = run_fold_scan(&config)?;
    print!("{:>8}", "b0\\gam");
    for g in &scan.p2_values {
        print!("{g:>9.3}");
    }
    println!();
    for (i, b) in scan.p1_values.iter().enumerate() {
        print!("{b:>8.3}");
        for j in 0..scan.p2_values.len() {
            match scan.cell(i, j).status.theta_plus() {
                Some(t) => print!("{t:>9.4}"),
                None => print!("{:>9}", "-"),
            }
        }
        match scan.window(*b, 1) {
            Some((lo, hi)) => println!("   m=1 window [{lo:.3}, {hi:.3}]"),
            None => println!("   no m=1 window"),
        }
    }
    println!("{} failed cells", scan.failures());
    Ok(())
}
