//! Arclength continuation of the base state in theta at gamma = 1, printing
//! the branch and the fold it runs into.

use hetturing::continuation::{continue_branch, BranchPoint, ContinuationSettings};
use hetturing::{Grid1D, ModelSpec, RdProblem, StateVector};

fn main() -> hetturing::Result<()> {
    let model = ModelSpec::schnakenberg(0.8, 1.0 / 40.0, 1.0)?;
    let grid = Grid1D::new(201)?;
    let problem = RdProblem::theta(model, grid);
    let u0 = StateVector::uniform(grid, model.uniform_steady_state()?).into_values();
    let settings = ContinuationSettings { param_min: -1.0, param_max: 1.0, max_points: 400, ..Default::default() };
    let branch = continue_branch(&problem, BranchPoint::new(0.0, u0), &settings)?;

    println!("{:>10} {:>10} {:>12} {:>7}", "theta", "max u", "lead re", "stable");
    for p in branch.points.iter().step_by(5) {
        let max_u = p.state[..p.state.len() / 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{:>10.5} {:>10.5} {:>12.4e} {:>7}",
            p.param,
            max_u,
            p.leading_eigenvalue_real().unwrap_or(f64::NAN),
            p.stable.map_or("-", |s| if s { "yes" } else { "no" })
        );
    }
    for f in &branch.folds {
        println!("fold at theta = {:.6} ({:?})", f.param, f.detection);
    }
    println!("termination: {:?}", branch.termination);
    Ok(())
}
