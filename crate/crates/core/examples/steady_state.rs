//! Newton solve of the Schnakenberg base state at small amplitude and its
//! leading eigenvalues.

use hetturing::stability::{stability_verdict, EigenSettings};
use hetturing::{assemble_jacobian, newton_solve, Grid1D, ModelSpec, NewtonSettings, StateVector};

fn main() -> hetturing::Result<()> {
    let model = ModelSpec::schnakenberg(0.8, 1.0 / 40.0, 1.0)?.with_theta(0.05);
    let grid = Grid1D::new(201)?;
    let guess = StateVector::uniform(grid, model.uniform_steady_state()?);
    let out = newton_solve(&model, &guess, 0.05, &NewtonSettings::default())?;
    println!("converged {} in {} iterations, residual {:.2e}", out.converged, out.iterations, out.final_residual_norm);
    println!("u in [{:.5}, {:.5}]", out.state.min_u(), out.state.max_u());

    let jac = assemble_jacobian(&model, &out.state, 0.05)?;
    let v = stability_verdict(&jac, 4, &EigenSettings::default())?;
    for l in &v.leading_eigenvalues {
        println!("  lambda = {:.6} {:+.6}i", l.re, l.im);
    }
    println!("stable: {}", v.stable);
    Ok(())
}
