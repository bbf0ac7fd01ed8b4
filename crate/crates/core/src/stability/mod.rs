//! Linear stability: discrete spectra of steady states, the homogeneous
//! dispersion relation and its instability windows, local Turing tests and
//! the solvability projection at a singular mode.

mod eigen;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use eigen::{dense_spectrum, leading_spectrum, leading_spectrum_with, EigenMethod, EigenSettings};

use crate::discretization::AssembledJacobian;
use crate::error::{Error, Result};
use crate::model::{Matrix2, ModelSpec};
use crate::quadrature::simpson;

/// Real parts inside `(-tol, tol)` count as marginal.
pub const STABILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub leading_eigenvalues: Vec<Complex64>,
    pub stable: bool,
    pub method: EigenMethod,
}

impl StabilityVerdict {
    pub fn leading_real(&self) -> f64 {
        self.leading_eigenvalues[0].re
    }

    pub fn marginal(&self) -> bool {
        self.leading_real().abs() < STABILITY_TOL
    }
}

pub fn stability_verdict(jac: &AssembledJacobian, k: usize, settings: &EigenSettings) -> Result<StabilityVerdict> {
    let (ev, method) = leading_spectrum_with(jac, k.max(1), settings)?;
    let stable = ev[0].re < -STABILITY_TOL;
    Ok(StabilityVerdict { leading_eigenvalues: ev, stable, method })
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues_2x2(a: &Matrix2) -> [Complex64; 2] {
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [Complex64::new(half + r, 0.0), Complex64::new(half - r, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [Complex64::new(half, r), Complex64::new(half, -r)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub m: usize,
    pub wavenumber: f64,
    pub matrix: Matrix2,
    pub eigenvalues: [Complex64; 2],
    pub lambda_max: f64,
}

/// `A = -D k² + γ j` at the uniform steady state.
pub fn mode_matrix(model: &ModelSpec, k_sq: f64) -> Result<Matrix2> {
    let j = model.eval_kinetics_jacobian(model.uniform_steady_state()?)?;
    let g = model.gamma();
    let d = model.diffusivities();
    Ok([
        [-d[0] * k_sq + g * j[0][0], g * j[0][1]],
        [g * j[1][0], -d[1] * k_sq + g * j[1][1]],
    ])
}

fn report(m: usize, k: f64, matrix: Matrix2) -> DispersionReport {
    let eigenvalues = eigenvalues_2x2(&matrix);
    DispersionReport { m, wavenumber: k, matrix, eigenvalues, lambda_max: eigenvalues[0].re }
}

/// Growth rates of `cos(mπx)` perturbations of the uniform state.
pub fn dispersion(model: &ModelSpec, m: usize) -> Result<DispersionReport> {
    let k = m as f64 * PI;
    Ok(report(m, k, mode_matrix(model, k * k)?))
}

/// As [`dispersion`] but with an arbitrary `k²`, for example the discrete
/// stencil eigenvalue.
pub fn dispersion_at(model: &ModelSpec, m: usize, k_sq: f64) -> Result<DispersionReport> {
    Ok(report(m, k_sq.sqrt(), mode_matrix(model, k_sq)?))
}

/// The interval in `γ` where the given `k²` is unstable, from the roots of
/// `det A(γ) = 0`. `None` when there is no window.
pub fn gamma_window(model: &ModelSpec, k_sq: f64) -> Result<Option<(f64, f64)>> {
    let j = model.eval_kinetics_jacobian(model.uniform_steady_state()?)?;
    let d = model.d();
    let a = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let b = -k_sq * (d * j[0][0] + j[1][1]);
    let c = d * k_sq * k_sq;
    if a <= 0.0 || b >= 0.0 {
        return Ok(None);
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return Ok(None);
    }
    let q = -0.5 * (b - disc.sqrt());
    let (r1, r2) = (c / q, q / a);
    Ok(Some((r1.min(r2), r1.max(r2))))
}

/// Roots in `γ` bounding the instability window of mode `m`.
pub fn gamma_instability_roots(model: &ModelSpec, m: usize) -> Result<Option<(f64, f64)>> {
    if m == 0 {
        return Err(Error::InvalidSettings("mode index must be at least 1".into()));
    }
    let k = m as f64 * PI;
    gamma_window(model, k * k)
}

/// Smallest lower root over modes `1..=max_mode`, with the mode attaining it.
pub fn critical_gamma(model: &ModelSpec, max_mode: usize) -> Result<Option<(f64, usize)>> {
    let mut best: Option<(f64, usize)> = None;
    for m in 1..=max_mode {
        if let Some((lo, _)) = gamma_instability_roots(model, m)? {
            if best.is_none_or(|(b, _)| lo < b) {
                best = Some((lo, m));
            }
        }
    }
    Ok(best)
}

/// Whether the homogeneous system with the production at `x` substituted for
/// the mean is Turing unstable for some wavenumber.
pub fn turing_region_local(model: &ModelSpec, x: f64, theta: f64) -> bool {
    let p = model.local_production(x, theta);
    let kin = model.kinetics().with_production(p);
    let Ok(local) = model.with_kinetics(kin) else {
        return false;
    };
    let Ok(u0) = local.uniform_steady_state() else {
        return false;
    };
    let Ok(j) = local.eval_kinetics_jacobian(u0) else {
        return false;
    };
    let d = model.d();
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let s = d * j[0][0] + j[1][1];
    tr < 0.0 && det > 0.0 && s > 0.0 && s * s > 4.0 * d * det
}

/// Maximal runs of `true` in `flags` as `(first, last)` index pairs.
pub fn flagged_intervals(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, flags.len() - 1));
    }
    out
}

/// Unit left null vector of a singular 2×2 matrix.
pub fn left_null_vector(a: &Matrix2, tol: f64) -> Result<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale: f64 = a.iter().flatten().map(|v| v * v).sum();
    if det.abs() > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSingular(format!("det = {det:e} is not zero")));
    }
    // cᵀ A = 0: c is orthogonal to both columns of A.
    let c1 = [a[1][0], -a[0][0]];
    let c2 = [a[1][1], -a[0][1]];
    let n1 = c1[0].hypot(c1[1]);
    let n2 = c2[0].hypot(c2[1]);
    let (c, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
    if n == 0.0 {
        // Zero matrix: any direction works.
        return Ok([1.0, 0.0]);
    }
    Ok([c[0] / n, c[1] / n])
}

/// `∫ G(x) · c* cos(mπx) dx` with `c*` the unit left null vector of `A_m`.
/// Errors unless `A_m` is singular.
pub fn fredholm_projection(model: &ModelSpec, m: usize) -> Result<f64> {
    let k = m as f64 * PI;
    let a = mode_matrix(model, k * k)?;
    let c = left_null_vector(&a, 1e-8)?;
    let h = model.heterogeneity();
    let dot = h.coupling[0] * c[0] + h.coupling[1] * c[1];
    let n = h.n as f64;
    Ok(dot * simpson(|x| (n * PI * x).cos() * (k * x).cos(), 0.0, 1.0, 4096))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schnak(gamma: f64) -> ModelSpec {
        ModelSpec::schnakenberg(0.8, 1.0 / 40.0, gamma).unwrap()
    }

    #[test]
    fn homogeneous_mode_is_stable() {
        for g in [0.5, 1.0, 9.0] {
            let r = dispersion(&schnak(g), 0).unwrap();
            assert!((r.matrix[0][0] + g).abs() < 1e-14);
            assert!((r.matrix[0][1] + 1.6 * g).abs() < 1e-14);
            assert!(r.lambda_max < 0.0);
        }
        assert!(dispersion(&schnak(1.0), 1).unwrap().lambda_max > 0.0);
        assert!(dispersion(&schnak(1.0), 200).unwrap().lambda_max < -5e3);
    }

    #[test]
    fn schnakenberg_windows() {
        let (lo, hi) = gamma_instability_roots(&schnak(1.0), 1).unwrap().unwrap();
        // Quadratic γ² - γπ²(0.6 - 1/40) + π⁴/40 = 0.
        let b = PI * PI * (0.6 - 0.025);
        let c = PI.powi(4) / 40.0;
        let r = (b * b - 4.0 * c).sqrt();
        assert!((lo - 0.5 * (b - r)).abs() < 1e-12);
        assert!((hi - 0.5 * (b + r)).abs() < 1e-12);
        assert!(lo < 1.0 && 1.0 < hi && hi < 9.0);
        let (lo2, hi2) = gamma_instability_roots(&schnak(1.0), 2).unwrap().unwrap();
        assert!((lo2 - 4.0 * lo).abs() < 1e-10 && (hi2 - 4.0 * hi).abs() < 1e-10);
        assert!(lo2 < 9.0 && 9.0 < hi2);
    }

    #[test]
    fn equal_diffusion_has_no_window() {
        let m = ModelSpec::schnakenberg(0.8, 1.0, 1.0).unwrap();
        for k in 1..10 {
            assert!(gamma_instability_roots(&m, k).unwrap().is_none());
        }
    }

    #[test]
    fn window_matches_sign_of_growth_rate() {
        let base = schnak(1.0);
        for m in 1..=3 {
            let (lo, hi) = gamma_instability_roots(&base, m).unwrap().unwrap();
            for i in 0..50 {
                let g = 0.05 * 1.15f64.powi(i);
                let lam = dispersion(&base.with_gamma(g).unwrap(), m).unwrap().lambda_max;
                if (g - lo).abs() > 1e-9 && (g - hi).abs() > 1e-9 {
                    assert_eq!(lam > 0.0, g > lo && g < hi, "m {m} γ {g}");
                }
            }
        }
    }

    #[test]
    fn local_turing_test() {
        let m = schnak(1.0);
        for i in 0..=20 {
            assert!(turing_region_local(&m, i as f64 / 20.0, 0.0));
        }
        let outside = ModelSpec::schnakenberg(0.5, 1.0 / 40.0, 1.0).unwrap();
        assert!(!turing_region_local(&outside, 0.3, 0.0));
        // β(x) ranges over [0, 1.6]: the flagged set is a proper subset.
        let flags: Vec<bool> = (0..=200).map(|i| turing_region_local(&m, i as f64 / 200.0, 1.0)).collect();
        assert!(flags.iter().any(|f| *f) && !flags.iter().all(|f| *f));
        assert_eq!(flagged_intervals(&[false, true, true, false, true]), vec![(1, 2), (4, 4)]);
    }

    #[test]
    fn projection_at_singular_mode() {
        let base = schnak(1.0);
        let (lo, _) = gamma_instability_roots(&base, 1).unwrap().unwrap();
        let model = base.with_gamma(lo).unwrap();
        let a = dispersion(&model, 1).unwrap().matrix;
        let c = left_null_vector(&a, 1e-8).unwrap();
        let expected = 0.5 * (0.8 * c[0] - 0.8 * c[1]);
        assert!((fredholm_projection(&model, 1).unwrap() - expected).abs() < 1e-12);
        assert!(expected.abs() > 1e-3);
        let model2 = model.with_mode(2).unwrap();
        assert!(fredholm_projection(&model2, 1).unwrap().abs() < 1e-12);
        // Coupling orthogonal to the null vector.
        let ortho = model.with_coupling([c[1], -c[0]]);
        assert!(fredholm_projection(&ortho, 1).unwrap().abs() < 1e-12);
        assert!(matches!(fredholm_projection(&schnak(1.0), 1), Err(Error::NotSingular(_))));
    }
}
