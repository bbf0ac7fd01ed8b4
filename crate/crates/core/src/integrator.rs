//! First-order IMEX time stepping of `u_t = D u_xx + γ (F̂(u) + θ G(x))`.
//!
//! Diffusion is implicit (backward Euler, one tridiagonal factorization per
//! species reused every step), reactions are explicit. Only steady states
//! matter here, so transient accuracy is not a goal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, StateVector};
use crate::model::ModelSpec;
use crate::newton::norm_inf;

/// States with an ∞-norm above this are treated as blown up.
pub const DIVERGENCE_NORM: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Perturbation {
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self { amplitude: 1e-2, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationSettings {
    /// Time step. `None` means `1e-3 / γ`.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// Stop once `‖du/dt‖∞` falls below this.
    pub steady_tol: f64,
    pub perturbation: Perturbation,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self { dt: None, t_max: 5000.0, steady_tol: 1e-9, perturbation: Perturbation::default() }
    }
}

impl IntegrationSettings {
    pub fn step_for(&self, model: &ModelSpec) -> f64 {
        self.dt.unwrap_or(1e-3 / model.gamma())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidSettings(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.steady_tol > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::InvalidSettings("steady_tol and t_max must be positive".into()));
        }
        if !(self.perturbation.amplitude >= 0.0) {
            return Err(Error::InvalidSettings("perturbation amplitude must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IntegrationOutcome {
    pub state: StateVector,
    pub converged: bool,
    pub time: f64,
    pub steps: usize,
    /// `‖du/dt‖∞` over the last step.
    pub rate: f64,
}

/// Precomputed Thomas factorization of `I - dt·d·L` for the Neumann stencil.
#[derive(Debug, Clone)]
struct Tridiag {
    lower: Vec<f64>,
    // Modified upper diagonal and inverse pivots.
    c: Vec<f64>,
    inv: Vec<f64>,
}

impl Tridiag {
    fn new(np: usize, a: f64) -> Self {
        let diag = vec![1.0 + 2.0 * a; np];
        let mut lower = vec![-a; np];
        let mut upper = vec![-a; np];
        upper[0] = -2.0 * a;
        lower[np - 1] = -2.0 * a;
        lower[0] = 0.0;
        upper[np - 1] = 0.0;
        let mut c = vec![0.0; np];
        let mut inv = vec![0.0; np];
        let mut prev_c = 0.0;
        for i in 0..np {
            let piv = diag[i] - lower[i] * prev_c;
            inv[i] = 1.0 / piv;
            c[i] = upper[i] * inv[i];
            prev_c = c[i];
        }
        Self { lower, c, inv }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let np = b.len();
        b[0] *= self.inv[0];
        for i in 1..np {
            b[i] = (b[i] - self.lower[i] * b[i - 1]) * self.inv[i];
        }
        for i in (0..np - 1).rev() {
            b[i] -= self.c[i] * b[i + 1];
        }
    }
}

/// One IMEX step map for fixed model, grid, `θ` and `dt`.
#[derive(Debug, Clone)]
pub struct ImexStepper {
    disc: Discretization,
    theta: f64,
    dt: f64,
    factors: [Tridiag; 2],
}

impl ImexStepper {
    pub fn new(model: ModelSpec, grid: Grid1D, theta: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSettings(format!("dt must be positive, got {dt}")));
        }
        let h2 = grid.spacing() * grid.spacing();
        let [d1, d2] = model.diffusivities();
        let np = grid.n_points();
        Ok(Self {
            disc: Discretization::new(model, grid),
            theta,
            dt,
            factors: [Tridiag::new(np, dt * d1 / h2), Tridiag::new(np, dt * d2 / h2)],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `values` in place and returns `‖du/dt‖∞` over the step.
    pub fn step(&self, values: &mut [f64]) -> Result<f64> {
        let np = self.disc.grid().n_points();
        let gamma = self.disc.model().gamma();
        let reaction = self.disc.reaction(values, self.theta)?;
        let mut rate = 0.0f64;
        for s in 0..2 {
            let block = &mut values[s * np..(s + 1) * np];
            let old = block.to_vec();
            for i in 0..np {
                block[i] += self.dt * gamma * reaction[s * np + i];
            }
            self.factors[s].solve_in_place(block);
            for i in 0..np {
                rate = rate.max(((block[i] - old[i]) / self.dt).abs());
            }
        }
        Ok(rate)
    }
}

/// Uniform steady state plus seeded noise, uniform in `[-amplitude, amplitude]`.
pub fn perturbed_uniform(model: &ModelSpec, grid: Grid1D, perturbation: Perturbation) -> Result<StateVector> {
    let mut s = StateVector::uniform(grid, model.uniform_steady_state()?);
    if perturbation.amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(perturbation.seed);
        for v in s.values_mut() {
            *v += perturbation.amplitude * rng.gen_range(-1.0..=1.0);
        }
    }
    Ok(s)
}

/// Trapezoid integral of `u + v`.
pub fn total_mass(state: &StateVector) -> f64 {
    let w = state.grid().trapezoid_weights();
    state.u().iter().zip(state.v()).zip(&w).map(|((a, b), w)| w * (a + b)).sum()
}

/// Integrates from `initial` until `‖du/dt‖∞ < steady_tol` or `t_max`.
pub fn evolve_to_steady(
    model: &ModelSpec,
    initial: &StateVector,
    theta: f64,
    settings: &IntegrationSettings,
) -> Result<IntegrationOutcome> {
    settings.validate()?;
    if !initial.is_finite() {
        return Err(Error::InvalidSettings("initial state is not finite".into()));
    }
    let stepper = ImexStepper::new(*model, initial.grid(), theta, settings.step_for(model))?;
    let dt = stepper.dt();
    let mut values = initial.values().to_vec();
    let max_steps = (settings.t_max / dt).ceil() as usize;
    let mut rate = f64::INFINITY;
    let mut steps = 0;
    while steps < max_steps {
        rate = stepper.step(&mut values)?;
        steps += 1;
        let norm = norm_inf(&values);
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Diverged { t: steps as f64 * dt, norm });
        }
        if rate < settings.steady_tol {
            break;
        }
    }
    Ok(IntegrationOutcome {
        state: StateVector::new(initial.grid(), values)?,
        converged: rate < settings.steady_tol,
        time: steps as f64 * dt,
        steps,
        rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::apply_laplacian;

    fn schnak(gamma: f64) -> ModelSpec {
        ModelSpec::schnakenberg(0.8, 1.0 / 40.0, gamma).unwrap()
    }

    #[test]
    fn tridiagonal_solve_inverts_the_operator() {
        let g = Grid1D::new(31).unwrap();
        let a = 0.7;
        let t = Tridiag::new(31, a);
        let x: Vec<f64> = (0..31).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        let lap = apply_laplacian(g, &x, 1.0).unwrap();
        let h2 = g.spacing() * g.spacing();
        let mut b: Vec<f64> = x.iter().zip(&lap).map(|(x, l)| x - a * h2 * l).collect();
        t.solve_in_place(&mut b);
        for (p, q) in b.iter().zip(&x) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn stable_uniform_state_stays_put() {
        // Below the mode-1 window's lower root (about 0.468).
        let model = schnak(0.3);
        let g = Grid1D::new(101).unwrap();
        let u0 = StateVector::uniform(g, model.uniform_steady_state().unwrap());
        let out = evolve_to_steady(&model, &u0, 0.0, &IntegrationSettings { t_max: 10.0, ..Default::default() })
            .unwrap();
        assert!(out.state.distance_inf(&u0) < 1e-8);
    }

    #[test]
    fn schnakenberg_mass_follows_net_production() {
        let model = schnak(1.0).with_theta(0.3);
        let g = Grid1D::new(81).unwrap();
        let w = g.trapezoid_weights();
        let dt = 1e-3;
        let stepper = ImexStepper::new(model, g, 0.3, dt).unwrap();
        let disc = Discretization::new(model, g);
        let mut s = perturbed_uniform(&model, g, Perturbation { amplitude: 0.05, seed: 3 }).unwrap();
        for _ in 0..200 {
            let m0 = total_mass(&s);
            let r = disc.reaction(s.values(), 0.3).unwrap();
            let np = g.n_points();
            let production: f64 = (0..np).map(|i| w[i] * model.gamma() * (r[i] + r[np + i])).sum();
            stepper.step(s.values_mut()).unwrap();
            let m1 = total_mass(&s);
            let rate = (m1 - m0) / dt;
            assert!((rate - production).abs() <= 1e-6 * production.abs().max(1e-3), "{rate} vs {production}");
        }
    }

    #[test]
    fn noise_is_reproducible() {
        let model = schnak(1.0);
        let g = Grid1D::new(21).unwrap();
        let p = Perturbation { amplitude: 1e-2, seed: 11 };
        let a = perturbed_uniform(&model, g, p).unwrap();
        let b = perturbed_uniform(&model, g, p).unwrap();
        assert_eq!(a.values(), b.values());
        let c = perturbed_uniform(&model, g, Perturbation { seed: 12, ..p }).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn rejects_bad_settings() {
        let s = IntegrationSettings { dt: Some(0.0), ..Default::default() };
        assert!(s.validate().is_err());
        let s = IntegrationSettings { steady_tol: -1.0, ..Default::default() };
        assert!(s.validate().is_err());
    }
}
