//! Where along x the local kinetics sit inside the Turing region.

use hetturing::experiments::turing_region::classify;
use hetturing::ModelSpec;

fn main() -> hetturing::Result<()> {
    let model = ModelSpec::schnakenberg(0.8, 1.0 / 40.0, 1.0)?.with_mode(2)?;
    for theta in [0.0, 0.2, 1.0 / 3.0, 0.6] {
        let (_, c) = classify(&model, theta, 1001);
        println!(
            "theta {theta:.3}: {:.1}% flagged, intervals {:?}, widest gap {:?}",
            100.0 * c.flagged_fraction,
            c.intervals,
            c.widest_gap()
        );
    }
    Ok(())
}
