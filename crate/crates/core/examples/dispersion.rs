//! Mode growth rates and per-mode gamma windows of the homogeneous problem.

use hetturing::stability::{dispersion, gamma_instability_roots};
use hetturing::ModelSpec;

fn main() -> hetturing::Result<()> {
    for (name, model) in [
        ("schnakenberg", ModelSpec::schnakenberg(0.8, 1.0 / 40.0, 1.0)?),
        ("gierer-meinhardt", ModelSpec::gierer_meinhardt(0.1, 1.0, 20.0, 1.0)?),
    ] {
        println!("{name}");
        for m in 1..=4 {
            let w = gamma_instability_roots(&model, m)?;
            let rates: Vec<String> = [1.0, 9.0, 30.0]
                .iter()
                .map(|&g| Ok(format!("{:+.4}", dispersion(&model.with_gamma(g)?, m)?.lambda_max)))
                .collect::<hetturing::Result<_>>()?;
            println!("  m={m} window {w:?}  Lambda at gamma 1, 9, 30: {}", rates.join(" "));
        }
    }
    Ok(())
}
