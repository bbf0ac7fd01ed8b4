//! Branch tracing for `Φ(u, p) = 0`.
//!
//! Natural continuation steps the parameter with an Euler predictor and a
//! Newton corrector at fixed `p`. Arclength continuation corrects on the
//! hyperplane orthogonal to the tangent, passes folds, and locates them from
//! the sign change of the tangent's parameter component.
//!
//! The inner product weights each state component by `1/dim` and the
//! parameter by 1, so tangents are balanced across grid resolutions.

mod engine;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use engine::{continue_branch, euler_predict, refine_fold, theta_plus, FoldBracket, ThetaPlus};

use crate::error::{Error, Result};
use crate::newton::NewtonSettings;
use crate::problem::ActiveParam;
use crate::stability::EigenSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param: f64,
    pub state: Vec<f64>,
    pub leading_eigenvalue: Option<Complex64>,
    pub stable: Option<bool>,
    pub arclength: f64,
    pub tangent_param_component: f64,
    pub residual_norm: f64,
}

impl BranchPoint {
    /// An untagged point, for seeding.
    pub fn new(param: f64, state: Vec<f64>) -> Self {
        Self {
            param,
            state,
            leading_eigenvalue: None,
            stable: None,
            arclength: 0.0,
            tangent_param_component: f64::NAN,
            residual_norm: f64::NAN,
        }
    }

    pub fn leading_eigenvalue_real(&self) -> Option<f64> {
        self.leading_eigenvalue.map(|l| l.re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldDetection {
    /// Sign change of the tangent's parameter component, refined on arclength.
    TangentSignChange,
    /// Natural mode: the corrector stopped converging past this parameter.
    CorrectorFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub param: f64,
    pub state: Vec<f64>,
    pub detection: FoldDetection,
    pub tangent_param_component: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    ParamLimit { param: f64 },
    MaxPoints,
    /// Stopped at the first fold, as requested or as natural mode must.
    Fold { param: f64 },
    /// Came back to the starting parameter at the starting state.
    ClosedLoop { gap: f64 },
    /// The leading eigenvalue's real part changed sign on the last step.
    StabilityChange { param: f64 },
    /// The step shrank below `min_step` without an acceptable point.
    Unresolved { param: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuationMode {
    Natural,
    Arclength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub folds: Vec<FoldRecord>,
    pub active_param: ActiveParam,
    pub mode: ContinuationMode,
    pub provenance: String,
    pub termination: Termination,
}

impl Branch {
    /// Smallest and largest parameter visited.
    pub fn param_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.param), hi.max(p.param)))
    }

    pub fn first_fold(&self) -> Option<&FoldRecord> {
        self.folds.first()
    }

    /// Per point, whether a fold lies between it and its predecessor.
    pub fn fold_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.points.len()];
        for i in 1..self.points.len() {
            let (a, b) = (self.points[i - 1].tangent_param_component, self.points[i].tangent_param_component);
            flags[i] = a * b < 0.0;
        }
        flags
    }

    pub fn is_unresolved(&self) -> bool {
        matches!(self.termination, Termination::Unresolved { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationSettings {
    pub mode: ContinuationMode,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub param_min: f64,
    pub param_max: f64,
    /// +1 to start towards increasing parameter, -1 otherwise.
    pub direction: f64,
    pub max_points: usize,
    pub newton: NewtonSettings,
    /// Iteration cap for each corrector solve.
    pub corrector_max_iters: usize,
    /// Corrected point may sit at most this many predictor-step norms away
    /// from the prediction.
    pub jump_factor: f64,
    /// Smallest accepted cosine between consecutive tangents.
    pub min_tangent_cos: f64,
    /// Target `|t_p|` for refined folds.
    pub fold_tol: f64,
    /// Parameter resolution of natural-mode fold bisection.
    pub fold_param_tol: f64,
    pub stop_at_first_fold: bool,
    pub track_stability: bool,
    /// Stop after the first step over which the leading eigenvalue's real
    /// part changes sign. Needs `track_stability`.
    pub stop_on_stability_change: bool,
    pub eigen: EigenSettings,
    /// Look for a return to the starting point when the parameter recrosses
    /// its starting value.
    pub detect_closure: bool,
    pub closure_tol: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        Self {
            mode: ContinuationMode::Arclength,
            initial_step: 1e-3,
            min_step: 1e-6,
            max_step: 1e-2,
            param_min: -1.0,
            param_max: 1.0,
            direction: 1.0,
            max_points: 20_000,
            newton: NewtonSettings::default(),
            corrector_max_iters: 12,
            jump_factor: 10.0,
            min_tangent_cos: 0.5,
            fold_tol: 1e-6,
            fold_param_tol: 1e-4,
            stop_at_first_fold: false,
            track_stability: true,
            stop_on_stability_change: false,
            eigen: EigenSettings::default(),
            detect_closure: false,
            closure_tol: 1e-3,
        }
    }
}

impl ContinuationSettings {
    /// θ from 0 to 1, stopping at the first fold, without stability.
    pub fn theta_plus_defaults() -> Self {
        Self {
            param_min: -1.0,
            param_max: 1.0,
            stop_at_first_fold: true,
            track_stability: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.newton.validate()?;
        let ok = self.min_step > 0.0
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_step.is_finite();
        if !ok {
            return Err(Error::InvalidSettings(format!(
                "need 0 < min_step <= initial_step <= max_step, got {} / {} / {}",
                self.min_step, self.initial_step, self.max_step
            )));
        }
        if !(self.param_min < self.param_max) {
            return Err(Error::InvalidSettings("param_min must be below param_max".into()));
        }
        if self.direction == 0.0 || !self.direction.is_finite() {
            return Err(Error::InvalidSettings("direction must be nonzero".into()));
        }
        if self.stop_on_stability_change && !self.track_stability {
            return Err(Error::InvalidSettings("stop_on_stability_change needs track_stability".into()));
        }
        if self.max_points < 2 || self.jump_factor <= 0.0 || self.corrector_max_iters == 0 {
            return Err(Error::InvalidSettings("max_points, jump_factor and corrector_max_iters".into()));
        }
        Ok(())
    }
}
