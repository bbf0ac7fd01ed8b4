//! Eigenvalues of largest real part for banded Jacobians.
//!
//! Small systems go through a dense real Schur decomposition. Larger ones use
//! shift-invert Arnoldi with a banded LU of `J - σI`, where `σ` starts above
//! the Gershgorin bound on the real parts and is then moved next to the
//! leading estimate.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::{BandedLu, BandedMatrix};
use crate::discretization::AssembledJacobian;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenSettings {
    pub method: EigenMethod,
    /// Largest matrix dimension handled densely under `Auto`.
    pub dense_max_dim: usize,
    pub max_krylov: usize,
    pub tol: f64,
}

impl Default for EigenSettings {
    fn default() -> Self {
        Self { method: EigenMethod::Auto, dense_max_dim: 160, max_krylov: 160, tol: 1e-10 }
    }
}

fn sort_desc(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

fn dense_eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let schur = Schur::try_new(m, 1e-14, 200 * n.max(10))
        .ok_or_else(|| Error::Eigen(format!("dense Schur did not converge (n = {n})")))?;
    let ev = schur.complex_eigenvalues();
    Ok(ev.iter().map(|c| Complex64::new(c.re, c.im)).collect())
}

/// All eigenvalues of a dense matrix, sorted by descending real part.
pub fn dense_spectrum(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let mut ev = dense_eigenvalues(m)?;
    sort_desc(&mut ev);
    Ok(ev)
}

/// Upper bound on the real part of every eigenvalue.
fn gershgorin_bound(m: &BandedMatrix) -> f64 {
    let n = m.dim();
    let (kl, ku) = (m.lower_bandwidth(), m.upper_bandwidth());
    (0..n)
        .map(|i| {
            let off: f64 = (i.saturating_sub(kl)..=(i + ku).min(n - 1))
                .filter(|&j| j != i)
                .map(|j| m.get(i, j).abs())
                .sum();
            m.get(i, i) + off
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

struct ArnoldiRun {
    ritz: Vec<Complex64>,
    converged: bool,
}

/// Ritz values of `(J - σI)^{-1}` mapped back to eigenvalues of `J`, sorted
/// by descending real part.
fn shift_invert_arnoldi(lu: &BandedLu, sigma: f64, want: usize, max_krylov: usize, tol: f64) -> ArnoldiRun {
    let n = lu.dim();
    let m_max = max_krylov.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    let mut h = DMatrix::<f64>::zeros(m_max + 1, m_max);
    let mut v0: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.73).sin()).collect();
    let nrm = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
    v0.iter_mut().for_each(|x| *x /= nrm);
    basis.push(v0);
    let mut prev: Option<Vec<Complex64>> = None;
    let check_every = 10;
    let mut last = Vec::new();
    for j in 0..m_max {
        let mut w = lu.solve(&basis[j]);
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c: f64 = w.iter().zip(b).map(|(a, b)| a * b).sum();
                h[(i, j)] += c;
                w.iter_mut().zip(b).for_each(|(a, b)| *a -= c * b);
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        h[(j + 1, j)] = beta;
        let size = j + 1;
        let invariant = beta <= 1e-14 * h.view((0, 0), (size, size)).norm();
        if size >= want.max(2) && (size % check_every == 0 || invariant || size == m_max) {
            let hm = h.view((0, 0), (size, size)).into_owned();
            if let Ok(mu) = dense_eigenvalues(hm) {
                let mut lam: Vec<Complex64> = mu
                    .into_iter()
                    .filter(|m| m.norm() > 1e-300)
                    .map(|m| Complex64::new(sigma, 0.0) + m.inv())
                    .collect();
                sort_desc(&mut lam);
                let head: Vec<Complex64> = lam.iter().take(want).copied().collect();
                let stable = match &prev {
                    Some(p) if p.len() == head.len() => p
                        .iter()
                        .zip(&head)
                        .all(|(a, b)| (a - b).norm() <= tol.max(1e-12) * (1.0 + b.norm()) * 1e2),
                    _ => false,
                };
                last = lam;
                if stable || invariant {
                    return ArnoldiRun { ritz: last, converged: true };
                }
                prev = Some(head);
            }
        }
        if invariant {
            break;
        }
        w.iter_mut().for_each(|x| *x /= beta);
        basis.push(w);
    }
    ArnoldiRun { ritz: last, converged: false }
}

fn iterative_spectrum(jac: &AssembledJacobian, k: usize, settings: &EigenSettings) -> Result<Vec<Complex64>> {
    let band = jac.banded();
    let bound = gershgorin_bound(band);
    let want = k.max(4);
    let run_at = |sigma: f64| -> Result<ArnoldiRun> {
        let mut shifted = band.clone();
        shifted.shift_diagonal(-sigma);
        let lu = shifted.lu()?;
        Ok(shift_invert_arnoldi(&lu, sigma, want, settings.max_krylov, settings.tol))
    };
    let sigma1 = bound + 0.1 * bound.abs().max(1.0);
    let first = run_at(sigma1)?;
    if first.ritz.is_empty() {
        return Err(Error::Eigen("Arnoldi produced no Ritz values".into()));
    }
    let lead = first.ritz[0].re;
    // Move the shift just above the leading estimate to sharpen it.
    let sigma2 = lead + 0.05 * lead.abs().max(0.2);
    let refined = if sigma2 < sigma1 { run_at(sigma2).ok() } else { None };
    let run = match refined {
        Some(r) if r.converged && !r.ritz.is_empty() => r,
        _ => first,
    };
    if !run.converged {
        return Err(Error::Eigen(format!(
            "shift-invert Arnoldi did not settle within {} vectors (dim {})",
            settings.max_krylov,
            jac.dim()
        )));
    }
    Ok(run.ritz.into_iter().take(k).collect())
}

/// The `k` eigenvalues of largest real part, sorted descending.
pub fn leading_spectrum(jac: &AssembledJacobian, k: usize) -> Result<Vec<Complex64>> {
    leading_spectrum_with(jac, k, &EigenSettings::default()).map(|(ev, _)| ev)
}

/// As [`leading_spectrum`], also reporting which method ran.
pub fn leading_spectrum_with(
    jac: &AssembledJacobian,
    k: usize,
    settings: &EigenSettings,
) -> Result<(Vec<Complex64>, EigenMethod)> {
    if k == 0 {
        return Err(Error::InvalidSettings("k must be at least 1".into()));
    }
    let dense = match settings.method {
        EigenMethod::Dense => true,
        EigenMethod::Iterative => false,
        EigenMethod::Auto => jac.dim() <= settings.dense_max_dim,
    };
    if dense || jac.dim() <= 8 {
        let ev = dense_spectrum(jac.banded().to_dense())?;
        return Ok((ev.into_iter().take(k).collect(), EigenMethod::Dense));
    }
    match iterative_spectrum(jac, k, settings) {
        Ok(ev) => Ok((ev, EigenMethod::Iterative)),
        Err(e) if settings.method == EigenMethod::Auto => {
            log::warn!("{e}; falling back to dense");
            let ev = dense_spectrum(jac.banded().to_dense())?;
            Ok((ev.into_iter().take(k).collect(), EigenMethod::Dense))
        }
        Err(e) => Err(e),
    }
}
