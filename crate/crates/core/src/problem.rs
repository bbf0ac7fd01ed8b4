//! Parameter-dependent steady-state problems `Φ(u, p) = 0`.
//!
//! The Newton solver and the continuation engine only see this trait, so the
//! same code traces reaction-diffusion branches and small test problems.

use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::discretization::{AssembledJacobian, Discretization};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, StateVector};
use crate::model::ModelSpec;
use crate::newton::norm_inf;

pub trait SteadyProblem: Sync {
    fn dim(&self) -> usize;

    fn residual(&self, u: &[f64], p: f64) -> Result<Vec<f64>>;

    fn jacobian(&self, u: &[f64], p: f64) -> Result<AssembledJacobian>;

    /// `∂Φ/∂p`.
    fn param_derivative(&self, u: &[f64], p: f64) -> Result<Vec<f64>>;

    fn active_param(&self) -> ActiveParam {
        ActiveParam::Theta
    }

    /// Residual level that rounding alone can produce at `u`. Convergence
    /// tests use the larger of this and the requested tolerance.
    fn roundoff_floor(&self, _u: &[f64]) -> f64 {
        0.0
    }

    /// Scalar used for plotting and the branch-identity guard.
    fn projection(&self, u: &[f64]) -> f64 {
        u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActiveParam {
    Theta,
    Gamma,
}

impl ActiveParam {
    pub fn name(self) -> &'static str {
        match self {
            ActiveParam::Theta => "theta",
            ActiveParam::Gamma => "gamma",
        }
    }
}

/// The discretized reaction-diffusion system with `θ` or `γ` free.
#[derive(Debug, Clone)]
pub struct RdProblem {
    disc: Discretization,
    param: ActiveParam,
}

impl RdProblem {
    /// `θ` free, `γ` taken from the model.
    pub fn theta(model: ModelSpec, grid: Grid1D) -> Self {
        Self { disc: Discretization::new(model, grid), param: ActiveParam::Theta }
    }

    /// `γ` free, `θ` fixed at the model's value.
    pub fn gamma(model: ModelSpec, grid: Grid1D) -> Self {
        Self { disc: Discretization::new(model, grid), param: ActiveParam::Gamma }
    }

    pub fn new(model: ModelSpec, grid: Grid1D, param: ActiveParam) -> Self {
        Self { disc: Discretization::new(model, grid), param }
    }

    pub fn model(&self) -> &ModelSpec {
        self.disc.model()
    }

    pub fn grid(&self) -> Grid1D {
        self.disc.grid()
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// Model with the active parameter set to `p`.
    pub fn model_at(&self, p: f64) -> Result<ModelSpec> {
        match self.param {
            ActiveParam::Theta => Ok(self.model().with_theta(p)),
            ActiveParam::Gamma => self.model().with_gamma(p),
        }
    }

    pub fn state(&self, u: &[f64]) -> Result<StateVector> {
        StateVector::new(self.grid(), u.to_vec())
    }

    fn check_gamma(p: f64) -> Result<()> {
        if p > 0.0 && p.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!("gamma must be positive, got {p}")))
        }
    }
}

impl SteadyProblem for RdProblem {
    fn dim(&self) -> usize {
        self.grid().dofs()
    }

    fn residual(&self, u: &[f64], p: f64) -> Result<Vec<f64>> {
        match self.param {
            ActiveParam::Theta => self.disc.residual(u, p),
            ActiveParam::Gamma => {
                Self::check_gamma(p)?;
                self.disc.residual_at_gamma(u, self.model().theta(), p)
            }
        }
    }

    fn jacobian(&self, u: &[f64], p: f64) -> Result<AssembledJacobian> {
        match self.param {
            ActiveParam::Theta => self.disc.jacobian(u),
            ActiveParam::Gamma => {
                Self::check_gamma(p)?;
                self.disc.jacobian_at_gamma(u, p)
            }
        }
    }

    fn param_derivative(&self, u: &[f64], _p: f64) -> Result<Vec<f64>> {
        match self.param {
            ActiveParam::Theta => Ok(self.disc.theta_derivative()),
            ActiveParam::Gamma => self.disc.gamma_derivative(u, self.model().theta()),
        }
    }

    fn active_param(&self) -> ActiveParam {
        self.param
    }

    // The stencil subtracts O(|u|) terms and scales them by d/h², so fine
    // grids cannot reach tolerances near 1e-10 without this.
    fn roundoff_floor(&self, u: &[f64]) -> f64 {
        let h = self.grid().spacing();
        let [d1, d2] = self.model().diffusivities();
        let scale = d1.max(d2) / (h * h) + self.model().gamma();
        8.0 * f64::EPSILON * scale * norm_inf(u).max(1.0)
    }

    fn projection(&self, u: &[f64]) -> f64 {
        u[..self.grid().n_points()].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Φ(u, θ) = u² + θ`, one unknown. Folds at `(0, 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarFold;

impl SteadyProblem for ScalarFold {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, u: &[f64], p: f64) -> Result<Vec<f64>> {
        Ok(vec![u[0] * u[0] + p])
    }

    fn jacobian(&self, u: &[f64], _p: f64) -> Result<AssembledJacobian> {
        let mut m = BandedMatrix::zeros(1, 0, 0);
        m.set(0, 0, 2.0 * u[0]);
        Ok(AssembledJacobian::from_banded(m))
    }

    fn param_derivative(&self, _u: &[f64], _p: f64) -> Result<Vec<f64>> {
        Ok(vec![1.0])
    }
}
