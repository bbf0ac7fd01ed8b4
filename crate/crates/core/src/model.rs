//! Two-species reaction kinetics with spatially varying production.
//!
//! The kinetics are split into an autonomous part `F̂(u)` and a production
//! heterogeneity `θ G(x)` with `G(x) = coupling · cos(nπx)`, so the spatial
//! mean of `G` vanishes for `n ≥ 1`. Setting `θ = 0` recovers the classical
//! homogeneous system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Concentrations `(u, v)` at a single point.
pub type Species = [f64; 2];

/// Row-major 2×2 matrix.
pub type Matrix2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kinetics {
    /// Substrate depletion: `f = -uv² + β`, `g = uv² - v + η` with `β + η = 1`.
    Schnakenberg { beta0: f64 },
    /// Activator-inhibitor: `f = u²/v - bu + a`, `g = u² - v`.
    GiererMeinhardt { a0: f64, b: f64 },
}

impl Kinetics {
    pub fn name(&self) -> &'static str {
        match self {
            Kinetics::Schnakenberg { .. } => "schnakenberg",
            Kinetics::GiererMeinhardt { .. } => "gierer-meinhardt",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Kinetics::Schnakenberg { beta0 } => {
                if !(0.0..=1.0).contains(&beta0) {
                    return Err(Error::InvalidModel(format!("beta0 = {beta0} outside [0, 1]")));
                }
            }
            Kinetics::GiererMeinhardt { a0, b } => {
                if !(a0 > 0.0 && a0.is_finite()) {
                    return Err(Error::InvalidModel(format!("a0 = {a0} must be positive")));
                }
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::InvalidModel(format!("b = {b} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// Per-species amplitude of the production heterogeneity.
    pub fn coupling(&self) -> Species {
        match *self {
            // η = 1 - β, so the v production varies opposite to u.
            Kinetics::Schnakenberg { beta0 } => [beta0, -beta0],
            Kinetics::GiererMeinhardt { a0, .. } => [a0, 0.0],
        }
    }

    /// Autonomous kinetics `F̂(u)`.
    pub fn autonomous(&self, u: Species) -> std::result::Result<Species, f64> {
        let [a, s] = u;
        match *self {
            Kinetics::Schnakenberg { beta0 } => {
                let r = a * s * s;
                Ok([-r + beta0, r - s + 1.0 - beta0])
            }
            Kinetics::GiererMeinhardt { a0, b } => {
                if s == 0.0 {
                    return Err(s);
                }
                Ok([a * a / s - b * a + a0, a * a - s])
            }
        }
    }

    /// Exact Jacobian of [`Kinetics::autonomous`].
    pub fn autonomous_jacobian(&self, u: Species) -> std::result::Result<Matrix2, f64> {
        let [a, s] = u;
        match *self {
            Kinetics::Schnakenberg { .. } => {
                Ok([[-s * s, -2.0 * a * s], [s * s, 2.0 * a * s - 1.0]])
            }
            Kinetics::GiererMeinhardt { b, .. } => {
                if s == 0.0 {
                    return Err(s);
                }
                Ok([[2.0 * a / s - b, -a * a / (s * s)], [2.0 * a, -1.0]])
            }
        }
    }

    pub fn uniform_steady_state(&self) -> Species {
        match *self {
            Kinetics::Schnakenberg { beta0 } => [beta0, 1.0],
            Kinetics::GiererMeinhardt { a0, b } => {
                let u = (1.0 + a0) / b;
                [u, u * u]
            }
        }
    }

    /// Same kinetics with the mean production replaced by `p`
    /// (β0 for Schnakenberg, a0 for Gierer-Meinhardt).
    pub fn with_production(&self, p: f64) -> Kinetics {
        match *self {
            Kinetics::Schnakenberg { .. } => Kinetics::Schnakenberg { beta0: p },
            Kinetics::GiererMeinhardt { b, .. } => Kinetics::GiererMeinhardt { a0: p, b },
        }
    }

    pub fn production(&self) -> f64 {
        match *self {
            Kinetics::Schnakenberg { beta0 } => beta0,
            Kinetics::GiererMeinhardt { a0, .. } => a0,
        }
    }
}

/// Amplitude and frequency of the production heterogeneity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityProfile {
    /// Amplitude, the continuation parameter. Unbounded.
    pub theta: f64,
    /// Mode frequency of `cos(nπx)`.
    pub n: u32,
    pub coupling: Species,
}

impl HeterogeneityProfile {
    /// Shape factor `cos(nπx)`.
    pub fn shape(&self, x: f64) -> f64 {
        (self.n as f64 * PI * x).cos()
    }

    /// `G(x)` (without the amplitude θ).
    pub fn eval(&self, x: f64) -> Species {
        let c = self.shape(x);
        [self.coupling[0] * c, self.coupling[1] * c]
    }
}

/// A heterogeneous two-species reaction-diffusion problem on (0, 1):
///
/// `u_t = D u_xx + γ (F̂(u) + θ G(x))` with no-flux boundaries and `D = diag(1, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    kinetics: Kinetics,
    d: f64,
    gamma: f64,
    heterogeneity: HeterogeneityProfile,
}

impl ModelSpec {
    pub fn new(kinetics: Kinetics, d: f64, gamma: f64, n: u32) -> Result<Self> {
        kinetics.validate()?;
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidModel(format!("diffusivity d = {d} must be positive")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidModel(format!("gamma = {gamma} must be positive")));
        }
        if n == 0 {
            log::warn!("heterogeneity mode n = 0 is a constant shift and has nonzero mean");
        }
        Ok(Self {
            kinetics,
            d,
            gamma,
            heterogeneity: HeterogeneityProfile { theta: 0.0, n, coupling: kinetics.coupling() },
        })
    }

    pub fn schnakenberg(beta0: f64, d: f64, gamma: f64) -> Result<Self> {
        Self::new(Kinetics::Schnakenberg { beta0 }, d, gamma, 1)
    }

    pub fn gierer_meinhardt(a0: f64, b: f64, d: f64, gamma: f64) -> Result<Self> {
        Self::new(Kinetics::GiererMeinhardt { a0, b }, d, gamma, 1)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.kinetics, self.d, gamma, self.heterogeneity.n).map(|m| m.with_theta(self.theta()))
    }

    pub fn with_mode(&self, n: u32) -> Result<Self> {
        Self::new(self.kinetics, self.d, self.gamma, n).map(|m| m.with_theta(self.theta()))
    }

    pub fn with_kinetics(&self, kinetics: Kinetics) -> Result<Self> {
        Self::new(kinetics, self.d, self.gamma, self.heterogeneity.n).map(|m| m.with_theta(self.theta()))
    }

    pub fn with_diffusivity(&self, d: f64) -> Result<Self> {
        Self::new(self.kinetics, d, self.gamma, self.heterogeneity.n).map(|m| m.with_theta(self.theta()))
    }

    /// Replace only the heterogeneity coupling vector. Used to probe the
    /// solvability condition with arbitrary heterogeneity directions.
    pub fn with_coupling(mut self, coupling: Species) -> Self {
        self.heterogeneity.coupling = coupling;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.heterogeneity.theta = theta;
        self
    }

    pub fn kinetics(&self) -> Kinetics {
        self.kinetics
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn diffusivities(&self) -> Species {
        [1.0, self.d]
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.heterogeneity.theta
    }

    pub fn mode(&self) -> u32 {
        self.heterogeneity.n
    }

    pub fn heterogeneity(&self) -> &HeterogeneityProfile {
        &self.heterogeneity
    }

    /// `F̂(u) + θ G(x)`.
    pub fn eval_kinetics(&self, u: Species, x: f64, theta: f64) -> Result<Species> {
        let f = self.kinetics.autonomous(u).map_err(|v| Error::DivisionByZero { x, v })?;
        let g = self.heterogeneity.eval(x);
        Ok([f[0] + theta * g[0], f[1] + theta * g[1]])
    }

    /// Jacobian of the autonomous kinetics. `G` does not depend on `u`.
    pub fn eval_kinetics_jacobian(&self, u: Species) -> Result<Matrix2> {
        self.kinetics
            .autonomous_jacobian(u)
            .map_err(|v| Error::DivisionByZero { x: f64::NAN, v })
    }

    pub fn uniform_steady_state(&self) -> Result<Species> {
        self.kinetics.validate()?;
        Ok(self.kinetics.uniform_steady_state())
    }

    /// Spatial mean of `G` over (0, 1). Vanishes for `n ≥ 1`.
    pub fn heterogeneity_mean(&self) -> Species {
        let h = &self.heterogeneity;
        let mean = simpson(|x| h.shape(x), 0.0, 1.0, 4096);
        [h.coupling[0] * mean, h.coupling[1] * mean]
    }

    /// Local production rate at `x` (β(x) or a(x)).
    pub fn local_production(&self, x: f64, theta: f64) -> f64 {
        self.kinetics.production() * (1.0 + theta * self.heterogeneity.shape(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn schnak() -> ModelSpec {
        ModelSpec::schnakenberg(0.8, 1.0 / 40.0, 1.0).unwrap()
    }

    fn gm() -> ModelSpec {
        ModelSpec::gierer_meinhardt(0.1, 1.0, 20.0, 1.0).unwrap()
    }

    #[test]
    fn schnakenberg_rates() {
        let m = schnak();
        let r = m.eval_kinetics([0.8, 1.0], 0.3, 0.0).unwrap();
        assert_abs_diff_eq!(r[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.0, epsilon = 1e-15);

        // β(0) = 1.2, η(0) = -0.2
        let r = m.eval_kinetics([0.8, 1.0], 0.0, 0.5).unwrap();
        assert_abs_diff_eq!(r[0], 0.4, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1], -0.4, epsilon = 1e-14);
    }

    #[test]
    fn gierer_meinhardt_rates() {
        let m = gm();
        let r = m.eval_kinetics([1.1, 1.21], 0.7, 0.0).unwrap();
        assert_abs_diff_eq!(r[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[1], 0.0, epsilon = 1e-14);
        assert!(matches!(m.eval_kinetics([1.0, 0.0], 0.0, 0.0), Err(Error::DivisionByZero { .. })));
        assert!(m.eval_kinetics_jacobian([1.0, 0.0]).is_err());
    }

    #[test]
    fn jacobians_at_steady_states() {
        let j = schnak().eval_kinetics_jacobian([0.8, 1.0]).unwrap();
        let expected = [[-1.0, -1.6], [1.0, 0.6]];
        for (row, erow) in j.iter().zip(&expected) {
            for (a, e) in row.iter().zip(erow) {
                assert_abs_diff_eq!(a, e, epsilon = 1e-14);
            }
        }

        let j = gm().eval_kinetics_jacobian([1.1, 1.21]).unwrap();
        assert_abs_diff_eq!(j[0][0], 2.2 / 1.21 - 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(j[0][0], 0.8182, epsilon = 1e-4);
        assert_abs_diff_eq!(j[0][1], -0.8264, epsilon = 1e-4);
        assert_abs_diff_eq!(j[1][0], 2.2, epsilon = 1e-14);
        assert_abs_diff_eq!(j[1][1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn steady_states() {
        assert_eq!(schnak().uniform_steady_state().unwrap(), [0.8, 1.0]);
        let s = ModelSpec::schnakenberg(0.5, 0.025, 1.0).unwrap().uniform_steady_state().unwrap();
        assert_eq!(s, [0.5, 1.0]);
        let g = gm().uniform_steady_state().unwrap();
        assert_abs_diff_eq!(g[0], 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(g[1], 1.21, epsilon = 1e-14);

        // β0 = 0 is the boundary case (u* = 0), still valid.
        let s = ModelSpec::schnakenberg(0.0, 0.025, 1.0).unwrap().uniform_steady_state().unwrap();
        assert_eq!(s, [0.0, 1.0]);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(ModelSpec::schnakenberg(1.2, 0.025, 1.0).is_err());
        assert!(ModelSpec::schnakenberg(0.8, 0.0, 1.0).is_err());
        assert!(ModelSpec::schnakenberg(0.8, 0.025, -1.0).is_err());
        assert!(ModelSpec::gierer_meinhardt(0.0, 1.0, 20.0, 1.0).is_err());
        assert!(ModelSpec::gierer_meinhardt(0.1, -1.0, 20.0, 1.0).is_err());
    }

    #[test]
    fn heterogeneity_mean_vanishes() {
        for n in [1, 4] {
            let mean = schnak().with_mode(n).unwrap().with_theta(0.7).heterogeneity_mean();
            assert!(mean[0].abs() < 1e-12 && mean[1].abs() < 1e-12, "{mean:?}");
        }
        let mean = schnak().with_mode(0).unwrap().heterogeneity_mean();
        assert_abs_diff_eq!(mean[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(mean[1], -0.8, epsilon = 1e-12);
    }
}
