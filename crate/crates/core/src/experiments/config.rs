//! JSON experiment configuration and `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::continuation::ContinuationSettings;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::integrator::IntegrationSettings;
use crate::model::{Kinetics, ModelSpec};
use crate::newton::NewtonSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Bifurcation,
    FoldScan,
    CriticalLength,
    TuringRegion,
    Dispersion,
    Simulate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bifurcation => "bifurcation",
            ExperimentKind::FoldScan => "fold-scan",
            ExperimentKind::CriticalLength => "critical-length",
            ExperimentKind::TuringRegion => "turing-region",
            ExperimentKind::Dispersion => "dispersion",
            ExperimentKind::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Schnakenberg,
    GiererMeinhardt,
}

/// Model block. Missing kinetic parameters take the usual defaults for the
/// chosen kinetics (`β0 = 0.8, d = 1/40` and `a0 = 0.1, b = 1, d = 20`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub beta0: Option<f64>,
    pub a0: Option<f64>,
    pub b: Option<f64>,
    pub d: Option<f64>,
    pub gamma: f64,
    pub n: u32,
    pub theta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: ModelKind::Schnakenberg, beta0: None, a0: None, b: None, d: None, gamma: 1.0, n: 1, theta: 0.0 }
    }
}

impl ModelConfig {
    pub fn schnakenberg(beta0: f64, gamma: f64) -> Self {
        Self { beta0: Some(beta0), gamma, ..Self::default() }
    }

    pub fn gierer_meinhardt(a0: f64, gamma: f64) -> Self {
        Self { kind: ModelKind::GiererMeinhardt, a0: Some(a0), gamma, ..Self::default() }
    }

    pub fn d(&self) -> f64 {
        self.d.unwrap_or(match self.kind {
            ModelKind::Schnakenberg => 1.0 / 40.0,
            ModelKind::GiererMeinhardt => 20.0,
        })
    }

    pub fn kinetics(&self) -> Kinetics {
        match self.kind {
            ModelKind::Schnakenberg => Kinetics::Schnakenberg { beta0: self.beta0.unwrap_or(0.8) },
            ModelKind::GiererMeinhardt => {
                Kinetics::GiererMeinhardt { a0: self.a0.unwrap_or(0.1), b: self.b.unwrap_or(1.0) }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let foreign = match self.kind {
            ModelKind::Schnakenberg => self.a0.is_some() || self.b.is_some(),
            ModelKind::GiererMeinhardt => self.beta0.is_some(),
        };
        if foreign {
            return Err(Error::Config(format!("parameters given that do not belong to {:?} kinetics", self.kind)));
        }
        self.to_spec().map(|_| ())
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        let m = ModelSpec::new(self.kinetics(), self.d(), self.gamma, self.n)?;
        Ok(m.with_theta(self.theta))
    }

    /// The kinetic parameter that sweeps vary by default.
    pub fn production_param(&self) -> &'static str {
        match self.kind {
            ModelKind::Schnakenberg => "beta0",
            ModelKind::GiererMeinhardt => "a0",
        }
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        let k = self.kinetics();
        Ok(match (name, k) {
            ("gamma", _) => self.gamma,
            ("theta", _) => self.theta,
            ("d", _) => self.d(),
            ("n", _) => self.n as f64,
            ("beta0", Kinetics::Schnakenberg { beta0 }) => beta0,
            ("a0", Kinetics::GiererMeinhardt { a0, .. }) => a0,
            ("b", Kinetics::GiererMeinhardt { b, .. }) => b,
            _ => return Err(self.unknown(name)),
        })
    }

    /// Copy with one named parameter replaced.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match (name, self.kind) {
            ("gamma", _) => c.gamma = value,
            ("theta", _) => c.theta = value,
            ("d", _) => c.d = Some(value),
            ("n", _) => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("n must be a nonnegative integer, got {value}")));
                }
                c.n = value as u32;
            }
            ("beta0", ModelKind::Schnakenberg) => c.beta0 = Some(value),
            ("a0", ModelKind::GiererMeinhardt) => c.a0 = Some(value),
            ("b", ModelKind::GiererMeinhardt) => c.b = Some(value),
            _ => return Err(self.unknown(name)),
        }
        Ok(c)
    }

    fn unknown(&self, name: &str) -> Error {
        Error::Config(format!("parameter '{name}' does not exist on the {:?} model", self.kind))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Sweep {
    pub fn new(param: &str, min: f64, max: f64, count: usize, spacing: Spacing) -> Self {
        Self { param: param.into(), min, max, count, spacing }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config(format!("sweep '{}' needs count >= 1", self.param)));
        }
        if !(self.min <= self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!("sweep '{}' bounds must be ordered", self.param)));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(Error::Config(format!("log sweep '{}' needs positive bounds", self.param)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.count {
                    return self.max;
                }
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// Grid size. When absent it follows [`auto_grid_points`].
    pub n_points: Option<usize>,
    pub newton: NewtonSettings,
    pub continuation: ContinuationSettings,
    pub integration: IntegrationSettings,
}

impl NumericsConfig {
    pub fn grid_for(&self, model: &ModelSpec) -> Result<Grid1D> {
        Grid1D::new(self.n_points.unwrap_or_else(|| auto_grid_points(model.gamma(), model.d())))
    }
}

/// Default resolution: at least 201 nodes, and at least four nodes per
/// `√(min(1, d)/γ)`, the shortest diffusion length.
pub fn auto_grid_points(gamma: f64, d: f64) -> usize {
    let per = (gamma / d.min(1.0)).sqrt();
    201.max((4.0 * per).ceil() as usize + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BifurcationOptions {
    pub theta_min: f64,
    pub theta_max: f64,
    /// Trace the base branch towards negative `θ` too.
    pub bidirectional: bool,
    /// Stop a base branch when it returns to the starting state.
    pub detect_closure: bool,
    /// Number of time-integration seeds for patterned branches.
    pub patterned_seeds: usize,
}

impl Default for BifurcationOptions {
    fn default() -> Self {
        Self { theta_min: -1.0, theta_max: 1.0, bidirectional: true, detect_closure: true, patterned_seeds: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldScanOptions {
    pub theta_max: f64,
    /// Overlay the instability windows of modes `1..=overlay_modes`.
    pub overlay_modes: usize,
}

impl Default for FoldScanOptions {
    fn default() -> Self {
        Self { theta_max: 1.0, overlay_modes: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticalLengthOptions {
    pub thetas: Vec<f64>,
    pub gamma_max: f64,
    pub gamma_min: f64,
    /// Modes searched for the homogeneous critical `γ`.
    pub max_mode: usize,
    /// The first stage runs at `γ_c0 (1 - stage1_offset)`.
    pub stage1_offset: f64,
    /// Bisection tolerance on `γ_c`.
    pub gamma_tol: f64,
}

impl Default for CriticalLengthOptions {
    fn default() -> Self {
        Self {
            thetas: vec![0.0, 1.0 / 6.0, 1.0 / 3.0, 0.5],
            gamma_max: 60.0,
            gamma_min: 1e-3,
            max_mode: 10,
            stage1_offset: 1e-2,
            gamma_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuringRegionOptions {
    /// Amplitudes to classify. Empty means the model's `θ`.
    pub thetas: Vec<f64>,
    pub samples: usize,
}

impl Default for TuringRegionOptions {
    fn default() -> Self {
        Self { thetas: Vec::new(), samples: 1001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionOptions {
    pub max_mode: usize,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        Self { max_mode: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateOptions {
    /// Newton-polish the final state and classify its stability.
    pub polish: bool,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self { polish: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must match the subcommand when given.
    pub experiment: Option<ExperimentKind>,
    pub model: ModelConfig,
    pub sweeps: Vec<Sweep>,
    pub numerics: NumericsConfig,
    pub bifurcation: BifurcationOptions,
    pub fold_scan: FoldScanOptions,
    pub critical_length: CriticalLengthOptions,
    pub turing_region: TuringRegionOptions,
    pub dispersion: DispersionOptions,
    pub simulate: SimulateOptions,
    pub output: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_value(v: Value) -> Result<Self> {
        serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_value(v)
    }

    /// Reads a config file and applies `key=value` overrides on top.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut v: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        Self::from_value(v)
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.experiment {
            if k != kind {
                return Err(Error::Config(format!("config is for '{}', not '{}'", k.name(), kind.name())));
            }
        }
        self.model.validate()?;
        self.numerics.newton.validate()?;
        self.numerics.integration.validate()?;
        if let Some(n) = self.numerics.n_points {
            Grid1D::new(n)?;
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        for s in &self.sweeps {
            s.validate()?;
            self.model.get(&s.param)?;
        }
        let need = |n: usize| -> Result<()> {
            if self.sweeps.len() != n {
                return Err(Error::Config(format!("'{}' needs {n} sweep block(s), got {}", kind.name(), self.sweeps.len())));
            }
            Ok(())
        };
        match kind {
            ExperimentKind::FoldScan => need(2)?,
            ExperimentKind::CriticalLength | ExperimentKind::Dispersion => {
                if self.sweeps.len() > 1 {
                    return Err(Error::Config(format!("'{}' takes at most one sweep", kind.name())));
                }
                if kind == ExperimentKind::Dispersion {
                    if let Some(s) = self.sweeps.first() {
                        if s.param != "gamma" {
                            return Err(Error::Config("dispersion sweeps gamma".into()));
                        }
                    }
                }
            }
            _ => {}
        }
        let b = &self.bifurcation;
        if !(b.theta_min <= 0.0 && 0.0 <= b.theta_max && b.theta_min < b.theta_max) {
            return Err(Error::Config("bifurcation needs theta_min <= 0 <= theta_max".into()));
        }
        if !(self.fold_scan.theta_max > 0.0) {
            return Err(Error::Config("fold_scan.theta_max must be positive".into()));
        }
        let c = &self.critical_length;
        if !(c.gamma_min > 0.0 && c.gamma_min < c.gamma_max) || c.max_mode == 0 || !(c.gamma_tol > 0.0) {
            return Err(Error::Config("critical_length bounds".into()));
        }
        if !(0.0..1.0).contains(&c.stage1_offset) {
            return Err(Error::Config("critical_length.stage1_offset must lie in [0, 1)".into()));
        }
        if self.turing_region.samples < 2 || self.dispersion.max_mode == 0 {
            return Err(Error::Config("turing_region.samples >= 2 and dispersion.max_mode >= 1".into()));
        }
        Ok(())
    }
}

/// Applies `a.b.c=value`. Numeric path segments index arrays. The value is
/// parsed as JSON and taken as a string when that fails.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override '{assignment}' has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if cur.is_null() {
            *cur = Value::Object(Default::default());
        }
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert(Value::Null)
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("'{part}' in '{key}' must index an array")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("index {idx} out of range ({len}) in '{key}'")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("'{key}' does not address an object field"))),
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_walk_objects_and_arrays() {
        let mut v = json!({"model": {"gamma": 1.0}, "sweeps": [{"param": "gamma", "min": 1, "max": 2, "count": 3}]});
        apply_override(&mut v, "model.gamma=9").unwrap();
        apply_override(&mut v, "sweeps.0.count=5").unwrap();
        apply_override(&mut v, "numerics.continuation.max_step=0.1").unwrap();
        apply_override(&mut v, "model.kind=gierer-meinhardt").unwrap();
        assert_eq!(v["model"]["gamma"], json!(9));
        assert_eq!(v["sweeps"][0]["count"], json!(5));
        assert_eq!(v["numerics"]["continuation"]["max_step"], json!(0.1));
        assert_eq!(v["model"]["kind"], json!("gierer-meinhardt"));
        assert!(apply_override(&mut v, "sweeps.3.min=1").is_err());
        assert!(apply_override(&mut v, "novalue").is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json_str(r#"{"modle": {}}"#).is_err());
        assert!(ExperimentConfig::from_json_str(r#"{"model": {"gama": 1}}"#).is_err());
        let c = ExperimentConfig::from_json_str(r#"{"model": {"gamma": 9}}"#).unwrap();
        assert_eq!(c.model.gamma, 9.0);
        assert_eq!(c.numerics.continuation.max_step, 1e-2);
    }

    #[test]
    fn sweep_spacing() {
        let s = Sweep::new("gamma", 0.3, 30.0, 3, Spacing::Log);
        let v = s.values();
        assert!((v[1] - 3.0).abs() < 1e-12 && (v[2] - 30.0).abs() < 1e-12);
        assert_eq!(Sweep::new("beta0", 0.1, 0.9, 5, Spacing::Linear).values()[2], 0.5);
        assert!(Sweep::new("gamma", 2.0, 1.0, 3, Spacing::Linear).validate().is_err());
        assert!(Sweep::new("gamma", 1.0, 2.0, 0, Spacing::Linear).validate().is_err());
    }

    #[test]
    fn parameters_belong_to_their_model() {
        let m = ModelConfig::default();
        assert_eq!(m.get("beta0").unwrap(), 0.8);
        assert!(m.get("a0").is_err());
        assert!(m.with("a0", 0.2).is_err());
        let g = ModelConfig::gierer_meinhardt(0.2, 1.0);
        assert_eq!(g.d(), 20.0);
        assert_eq!(g.with("b", 2.0).unwrap().get("b").unwrap(), 2.0);
        let bad = ModelConfig { beta0: Some(0.5), ..ModelConfig::gierer_meinhardt(0.1, 1.0) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_rule() {
        assert_eq!(auto_grid_points(1.0, 1.0 / 40.0), 201);
        assert!(auto_grid_points(900.0, 1.0 / 40.0) >= 700);
        assert_eq!(auto_grid_points(9.0, 20.0), 201);
    }
}
