use crate::discretization::{AssembledJacobian, JacobianLu};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::ModelSpec;
use crate::newton::{self, norm_inf, NewtonSettings};
use crate::problem::{RdProblem, SteadyProblem};
use crate::stability::stability_verdict;

use super::{Branch, BranchPoint, ContinuationMode, ContinuationSettings, FoldDetection, FoldRecord, Termination};

/// Unit tangent in the weighted norm.
#[derive(Debug, Clone)]
struct Tangent {
    u: Vec<f64>,
    p: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn wnorm(w: f64, u: &[f64], p: f64) -> f64 {
    (w * dot(u, u) + p * p).sqrt()
}

fn wdist(w: f64, a: &[f64], pa: f64, b: &[f64], pb: f64) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (w * s + (pa - pb) * (pa - pb)).sqrt()
}

fn axpy(x: &[f64], s: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + s * b).collect()
}

/// Solves `[J b; w cᵀ d] [x; xp] = [ru; rp]` by block elimination with one
/// step of iterative refinement.
struct Bordered<'a> {
    jac: &'a AssembledJacobian,
    lu: JacobianLu,
    b: &'a [f64],
    c: &'a [f64],
    d: f64,
    w: f64,
    a: Vec<f64>,
    den: f64,
}

impl<'a> Bordered<'a> {
    fn new(jac: &'a AssembledJacobian, b: &'a [f64], c: &'a [f64], d: f64, w: f64) -> Result<Self> {
        let lu = jac.lu_regularized()?;
        let a = lu.solve(b);
        let den = d - w * dot(c, &a);
        if !den.is_finite() || den == 0.0 || !a.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular { row: jac.dim() });
        }
        Ok(Self { jac, lu, b, c, d, w, a, den })
    }

    fn once(&self, ru: &[f64], rp: f64) -> (Vec<f64>, f64) {
        let y = self.lu.solve(ru);
        let xp = (rp - self.w * dot(self.c, &y)) / self.den;
        (axpy(&y, -xp, &self.a), xp)
    }

    fn solve(&self, ru: &[f64], rp: f64) -> (Vec<f64>, f64) {
        let (mut x, mut xp) = self.once(ru, rp);
        let jx = self.jac.mul_vec(&x);
        let res_u: Vec<f64> = (0..x.len()).map(|i| ru[i] - jx[i] - self.b[i] * xp).collect();
        let res_p = rp - self.w * dot(self.c, &x) - self.d * xp;
        let (dx, dxp) = self.once(&res_u, res_p);
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        xp += dxp;
        (x, xp)
    }
}

struct Tracer<'a, P: SteadyProblem + ?Sized> {
    problem: &'a P,
    settings: &'a ContinuationSettings,
    w: f64,
    corrector: NewtonSettings,
}

impl<'a, P: SteadyProblem + ?Sized> Tracer<'a, P> {
    fn new(problem: &'a P, settings: &'a ContinuationSettings) -> Self {
        let corrector = NewtonSettings { max_iters: settings.corrector_max_iters, ..settings.newton };
        Self { problem, settings, w: 1.0 / problem.dim() as f64, corrector }
    }

    /// `du/dp` along the branch at a regular point.
    fn param_sensitivity(&self, u: &[f64], p: f64) -> Result<Vec<f64>> {
        let jac = self.problem.jacobian(u, p)?;
        let lu = jac.lu()?;
        let phi_p = self.problem.param_derivative(u, p)?;
        let z = lu.solve(&phi_p);
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::Singular { row: 0 });
        }
        Ok(z.into_iter().map(|v| -v).collect())
    }

    fn natural_tangent(&self, u: &[f64], p: f64, direction: f64) -> Result<Tangent> {
        let z = self.param_sensitivity(u, p)?;
        let s = direction.signum() / wnorm(self.w, &z, 1.0);
        Ok(Tangent { u: z.iter().map(|v| v * s).collect(), p: s })
    }

    /// Tangent at `(u, p)` with positive inner product against `prev`,
    /// together with the cosine of the angle between them.
    fn tangent(&self, u: &[f64], p: f64, prev: &Tangent) -> Result<(Tangent, f64)> {
        let jac = self.problem.jacobian(u, p)?;
        let phi_p = self.problem.param_derivative(u, p)?;
        let sys = Bordered::new(&jac, &phi_p, &prev.u, prev.p, self.w)?;
        let zero = vec![0.0; u.len()];
        let (zu, zp) = sys.solve(&zero, 1.0);
        let n = wnorm(self.w, &zu, zp);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Singular { row: 0 });
        }
        let t = Tangent { u: zu.iter().map(|v| v / n).collect(), p: zp / n };
        let cos = self.w * dot(&t.u, &prev.u) + t.p * prev.p;
        Ok((t, cos))
    }

    /// Newton on `Φ = 0` plus the hyperplane `⟨t, X - X0⟩ = s`.
    fn correct_arclength(&self, u0: &[f64], p0: f64, t: &Tangent, s: f64) -> Option<(Vec<f64>, f64, usize, f64)> {
        let mut u = axpy(u0, s, &t.u);
        let mut p = p0 + s * t.p;
        let constraint =
            |u: &[f64], p: f64| self.w * u.iter().zip(u0).zip(&t.u).map(|((a, b), c)| (a - b) * c).sum::<f64>() + (p - p0) * t.p - s;
        let merit = |u: &[f64], p: f64| -> (f64, Option<Vec<f64>>) {
            match self.problem.residual(u, p) {
                Ok(r) => {
                    let n = norm_inf(&r);
                    if n.is_finite() {
                        (n + constraint(u, p).abs(), Some(r))
                    } else {
                        (f64::INFINITY, None)
                    }
                }
                Err(_) => (f64::INFINITY, None),
            }
        };
        let (mut m, r) = merit(&u, p);
        let mut r = r?;
        let tol = self.settings.newton.abs_tol.max(self.problem.roundoff_floor(u0));
        for it in 0..=self.settings.corrector_max_iters {
            let rn = norm_inf(&r);
            let nc = constraint(&u, p);
            if rn <= tol && nc.abs() <= 1e-9 * (1.0 + s.abs()) {
                return Some((u, p, it, rn));
            }
            if it == self.settings.corrector_max_iters {
                break;
            }
            let jac = self.problem.jacobian(&u, p).ok()?;
            let phi_p = self.problem.param_derivative(&u, p).ok()?;
            let sys = Bordered::new(&jac, &phi_p, &t.u, t.p, self.w).ok()?;
            let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
            let (du, dp) = sys.solve(&neg_r, -nc);
            if !du.iter().all(|v| v.is_finite()) || !dp.is_finite() {
                return None;
            }
            let mut lambda = 1.0;
            loop {
                let tu = axpy(&u, lambda, &du);
                let tp = p + lambda * dp;
                let (tm, tr) = merit(&tu, tp);
                if tm < m * (1.0 - 1e-4 * lambda) {
                    u = tu;
                    p = tp;
                    m = tm;
                    r = tr?;
                    break;
                }
                lambda *= self.settings.newton.damping;
                if lambda < self.settings.newton.min_step {
                    return None;
                }
            }
        }
        None
    }

    fn tag(&self, point: &mut BranchPoint) {
        if !self.settings.track_stability {
            return;
        }
        let verdict = self
            .problem
            .jacobian(&point.state, point.param)
            .and_then(|j| stability_verdict(&j, 1, &self.settings.eigen));
        match verdict {
            Ok(v) => {
                point.leading_eigenvalue = Some(v.leading_eigenvalues[0]);
                point.stable = Some(v.stable);
            }
            Err(e) => log::warn!("stability at p = {}: {e}", point.param),
        }
    }

    fn make_point(&self, u: Vec<f64>, p: f64, arclength: f64, tp: f64, resid: f64) -> BranchPoint {
        let mut pt = BranchPoint {
            param: p,
            state: u,
            leading_eigenvalue: None,
            stable: None,
            arclength,
            tangent_param_component: tp,
            residual_norm: resid,
        };
        self.tag(&mut pt);
        pt
    }

    /// Guards against landing on a different branch.
    fn jump_ok(&self, y: &[f64], yp: f64, pred: &[f64], pp: f64, base: &[f64], bp: f64) -> bool {
        let step = wdist(self.w, pred, pp, base, bp);
        if wdist(self.w, y, yp, pred, pp) > self.settings.jump_factor * step {
            return false;
        }
        let dproj = (self.problem.projection(y) - self.problem.projection(pred)).abs();
        let raw_step = pred.iter().zip(base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) + (pp - bp).abs();
        dproj <= self.settings.jump_factor * raw_step
    }

    /// Corrected point at arclength `s` from `(u0, p0)` and its tangent's
    /// parameter component.
    fn fold_function(&self, u0: &[f64], p0: f64, t: &Tangent, s: f64) -> Option<(Vec<f64>, f64, f64)> {
        let (u, p, _, _) = self.correct_arclength(u0, p0, t, s)?;
        let (ts, _) = self.tangent(&u, p, t).ok()?;
        Some((u, p, ts.p))
    }

    /// Regula falsi (Illinois) on the arclength for `t_p = 0` between the
    /// point `(u0, p0)` with tangent `t` and the point at arclength `s_hi`.
    fn refine_arclength(&self, u0: &[f64], p0: f64, t: &Tangent, s_hi: f64, tp_hi: f64) -> Result<FoldRecord> {
        let (mut a, mut fa) = (0.0f64, t.p);
        let (mut b, mut fb) = (s_hi, tp_hi);
        if fa * fb >= 0.0 {
            return Err(Error::InvalidBracket(format!("t_p does not change sign ({fa}, {fb})")));
        }
        let mut best: Option<(f64, Vec<f64>, f64)> = None;
        for _ in 0..100 {
            let (lo, hi) = (a.min(b), a.max(b));
            if hi - lo < 1e-14 {
                break;
            }
            let mut s = (a * fb - b * fa) / (fb - fa);
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let mid = 0.5 * (lo + hi);
            let attempt = self
                .fold_function(u0, p0, t, s)
                .map(|r| (s, r))
                .or_else(|| self.fold_function(u0, p0, t, mid).map(|r| (mid, r)));
            let Some((s, (u, p, fs))) = attempt else {
                break;
            };
            if best.as_ref().is_none_or(|(_, _, f)| fs.abs() < f.abs()) {
                best = Some((p, u, fs));
            }
            if fs.abs() < self.settings.fold_tol {
                break;
            }
            if fs * fb < 0.0 {
                a = b;
                fa = fb;
            } else {
                fa *= 0.5;
            }
            b = s;
            fb = fs;
        }
        let (param, state, tp) = best.ok_or_else(|| Error::InvalidBracket("corrector failed inside bracket".into()))?;
        Ok(FoldRecord { param, state, detection: FoldDetection::TangentSignChange, tangent_param_component: tp })
    }

    /// Bisection in the parameter between a converged point and a parameter
    /// where the corrector failed.
    fn refine_natural(&self, start: &BranchPoint, failed: f64) -> Result<FoldRecord> {
        if !(failed - start.param).is_finite() || failed == start.param {
            return Err(Error::InvalidBracket("empty natural bracket".into()));
        }
        let (mut lo, mut hi) = (start.param, failed);
        let mut u = start.state.clone();
        let mut z = self.param_sensitivity(&u, lo)?;
        while (hi - lo).abs() > self.settings.fold_param_tol.min(1e-4) {
            let mid = 0.5 * (lo + hi);
            let seed = axpy(&u, mid - lo, &z);
            let rep = newton::solve(self.problem, &seed, mid, &self.corrector);
            let ok = rep.converged && self.jump_ok(&rep.values, mid, &seed, mid, &u, lo);
            let next_z = if ok { self.param_sensitivity(&rep.values, mid).ok() } else { None };
            match next_z {
                Some(nz) => {
                    lo = mid;
                    u = rep.values;
                    z = nz;
                }
                None => hi = mid,
            }
        }
        let tp = 1.0 / wnorm(self.w, &z, 1.0);
        Ok(FoldRecord {
            param: 0.5 * (lo + hi),
            state: u,
            detection: FoldDetection::CorrectorFailure,
            tangent_param_component: tp,
        })
    }

    fn limit_crossed(&self, p: f64) -> Option<f64> {
        if p > self.settings.param_max {
            Some(self.settings.param_max)
        } else if p < self.settings.param_min {
            Some(self.settings.param_min)
        } else {
            None
        }
    }

    /// Solves at `target` between two converged points by interpolating.
    fn solve_between(&self, a: &[f64], pa: f64, b: &[f64], pb: f64, target: f64) -> Option<(Vec<f64>, f64)> {
        let f = (target - pa) / (pb - pa);
        let seed: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + f * (y - x)).collect();
        let rep = newton::solve(self.problem, &seed, target, &self.settings.newton);
        rep.converged.then_some((rep.values, rep.final_residual_norm))
    }

    fn run(&self, seed: BranchPoint, provenance: String) -> Result<Branch> {
        let s = self.settings;
        let rep = newton::solve(self.problem, &seed.state, seed.param, &s.newton);
        if !rep.converged {
            return Err(Error::NotConverged(format!(
                "seed at p = {} has residual {:e}",
                seed.param, rep.final_residual_norm
            )));
        }
        let mut t = self.natural_tangent(&rep.values, seed.param, s.direction)?;
        let first = self.make_point(rep.values, seed.param, 0.0, t.p, rep.final_residual_norm);
        let start_state = first.state.clone();
        let start_param = first.param;
        let mut branch = Branch {
            points: vec![first],
            folds: Vec::new(),
            active_param: self.problem.active_param(),
            mode: s.mode,
            provenance,
            termination: Termination::MaxPoints,
        };
        let mut ds = s.initial_step;
        let mut streak = 0;
        while branch.points.len() < s.max_points {
            let last = branch.points.last().expect("branch is never empty");
            let (u0, p0, arc0) = (last.state.clone(), last.param, last.arclength);
            let step = match s.mode {
                ContinuationMode::Arclength => self.arclength_step(&u0, p0, &t, ds),
                ContinuationMode::Natural => self.natural_step(&u0, p0, &t, ds),
            };
            let Some((u1, p1, iters, resid, t1)) = step else {
                ds *= 0.5;
                streak = 0;
                if ds < s.min_step {
                    if s.mode == ContinuationMode::Natural && t.p.abs() < 0.05 {
                        let failed = p0 + s.direction.signum() * 2.0 * ds;
                        let fold = self.refine_natural(branch.points.last().unwrap(), failed)?;
                        branch.termination = Termination::Fold { param: fold.param };
                        branch.folds.push(fold);
                    } else {
                        branch.termination = Termination::Unresolved {
                            param: p0,
                            reason: format!("no acceptable step down to {:e}", s.min_step),
                        };
                    }
                    return Ok(branch);
                }
                continue;
            };

            let folded = t.p * t1.p < 0.0;
            if folded {
                let s_hi = self.w * u1.iter().zip(&u0).zip(&t.u).map(|((a, b), c)| (a - b) * c).sum::<f64>()
                    + (p1 - p0) * t.p;
                match self.refine_arclength(&u0, p0, &t, s_hi, t1.p) {
                    Ok(fold) => branch.folds.push(fold),
                    Err(e) => log::warn!("fold refinement failed near p = {p0}: {e}"),
                }
            }

            if let Some(limit) = self.limit_crossed(p1) {
                if let Some((u, r)) = self.solve_between(&u0, p0, &u1, p1, limit) {
                    let arc = arc0 + wdist(self.w, &u, limit, &u0, p0);
                    branch.points.push(self.make_point(u, limit, arc, t1.p, r));
                }
                branch.termination = Termination::ParamLimit { param: limit };
                return Ok(branch);
            }

            if s.detect_closure && branch.points.len() >= 3 && (p0 - start_param) * (p1 - start_param) < 0.0 {
                if let Some((u, r)) = self.solve_between(&u0, p0, &u1, p1, start_param) {
                    let gap = u.iter().zip(&start_state).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    if gap < s.closure_tol {
                        let arc = arc0 + wdist(self.w, &u, start_param, &u0, p0);
                        branch.points.push(self.make_point(u, start_param, arc, t1.p, r));
                        branch.termination = Termination::ClosedLoop { gap };
                        return Ok(branch);
                    }
                }
            }

            let arc = arc0 + wdist(self.w, &u1, p1, &u0, p0);
            branch.points.push(self.make_point(u1, p1, arc, t1.p, resid));
            t = t1;
            if p1 == s.param_max || p1 == s.param_min {
                branch.termination = Termination::ParamLimit { param: p1 };
                return Ok(branch);
            }
            if s.stop_on_stability_change {
                let n = branch.points.len();
                let re = |i: usize| branch.points[i].leading_eigenvalue_real().unwrap_or(f64::NAN);
                if re(n - 2) * re(n - 1) < 0.0 {
                    branch.termination = Termination::StabilityChange { param: p1 };
                    return Ok(branch);
                }
            }

            if folded && (s.stop_at_first_fold || s.mode == ContinuationMode::Natural) {
                let param = branch.folds.last().map_or(p0, |f| f.param);
                branch.termination = Termination::Fold { param };
                return Ok(branch);
            }

            if iters <= 3 {
                streak += 1;
                if streak >= 3 {
                    ds = (ds * 1.3).min(s.max_step);
                    streak = 0;
                }
            } else {
                streak = 0;
            }
        }
        Ok(branch)
    }

    fn arclength_step(&self, u0: &[f64], p0: f64, t: &Tangent, ds: f64) -> Option<(Vec<f64>, f64, usize, f64, Tangent)> {
        let pred = axpy(u0, ds, &t.u);
        let pp = p0 + ds * t.p;
        let (u1, p1, iters, resid) = self.correct_arclength(u0, p0, t, ds)?;
        if !self.jump_ok(&u1, p1, &pred, pp, u0, p0) {
            return None;
        }
        let (t1, cos) = self.tangent(&u1, p1, t).ok()?;
        if cos < self.settings.min_tangent_cos {
            return None;
        }
        Some((u1, p1, iters, resid, t1))
    }

    fn natural_step(&self, u0: &[f64], p0: f64, t: &Tangent, ds: f64) -> Option<(Vec<f64>, f64, usize, f64, Tangent)> {
        let dir = self.settings.direction.signum();
        let mut p1 = p0 + dir * ds;
        if let Some(limit) = self.limit_crossed(p1) {
            p1 = limit;
        }
        let dp = p1 - p0;
        // t is (z, 1)·s with s = dir/‖(z, 1)‖, so z = t.u / t.p.
        let pred: Vec<f64> = u0.iter().zip(&t.u).map(|(a, b)| a + b / t.p * dp).collect();
        let rep = newton::solve(self.problem, &pred, p1, &self.corrector);
        if !rep.converged || !self.jump_ok(&rep.values, p1, &pred, p1, u0, p0) {
            return None;
        }
        let t1 = self.natural_tangent(&rep.values, p1, dir).ok()?;
        Some((rep.values, p1, rep.iterations, rep.final_residual_norm, t1))
    }
}

/// Euler predictor `u - J⁻¹ Φ_p Δp` from a converged point.
///
/// Errors with [`Error::Singular`] at a singular Jacobian, where only
/// arclength continuation can proceed.
pub fn euler_predict<P: SteadyProblem + ?Sized>(problem: &P, point: &BranchPoint, dparam: f64) -> Result<Vec<f64>> {
    let settings = ContinuationSettings::default();
    let tracer = Tracer::new(problem, &settings);
    let z = tracer.param_sensitivity(&point.state, point.param)?;
    Ok(axpy(&point.state, dparam, &z))
}

/// Traces a branch from a converged seed.
pub fn continue_branch<P: SteadyProblem + ?Sized>(
    problem: &P,
    seed: BranchPoint,
    settings: &ContinuationSettings,
) -> Result<Branch> {
    settings.validate()?;
    if seed.state.len() != problem.dim() {
        return Err(Error::LengthMismatch { expected: problem.dim(), got: seed.state.len() });
    }
    let provenance = format!("{} continuation from p = {}", problem.active_param().name(), seed.param);
    Tracer::new(problem, settings).run(seed, provenance)
}

/// Two points around a fold.
#[derive(Debug, Clone, Copy)]
pub enum FoldBracket<'a> {
    /// Consecutive arclength points whose tangents' parameter components
    /// have opposite signs.
    Tangent { before: &'a BranchPoint, after: &'a BranchPoint },
    /// A converged point and a parameter beyond it where the corrector failed.
    Natural { last_converged: &'a BranchPoint, failed_param: f64 },
}

/// Locates a fold inside a bracket.
pub fn refine_fold<P: SteadyProblem + ?Sized>(
    problem: &P,
    bracket: FoldBracket<'_>,
    settings: &ContinuationSettings,
) -> Result<FoldRecord> {
    let tracer = Tracer::new(problem, settings);
    match bracket {
        FoldBracket::Natural { last_converged, failed_param } => tracer.refine_natural(last_converged, failed_param),
        FoldBracket::Tangent { before, after } => {
            let w = tracer.w;
            let du: Vec<f64> = after.state.iter().zip(&before.state).map(|(a, b)| a - b).collect();
            let dp = after.param - before.param;
            let n = wnorm(w, &du, dp);
            if n == 0.0 {
                return Err(Error::InvalidBracket("bracket points coincide".into()));
            }
            let secant = Tangent { u: du.iter().map(|v| v / n).collect(), p: dp / n };
            let (t0, _) = tracer.tangent(&before.state, before.param, &secant)?;
            let (t1, _) = tracer.tangent(&after.state, after.param, &t0)?;
            if t0.p * t1.p >= 0.0 {
                return Err(Error::InvalidBracket(format!(
                    "tangent parameter components {} and {} do not change sign",
                    t0.p, t1.p
                )));
            }
            let s_hi = w * dot(&du, &t0.u) + dp * t0.p;
            tracer.refine_arclength(&before.state, before.param, &t0, s_hi, t1.p)
        }
    }
}

/// Largest amplitude reached by the base branch before its first fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaPlus {
    Fold(f64),
    /// Reached the upper limit without folding.
    NoFold,
    Unresolved { param: f64 },
}

impl ThetaPlus {
    pub fn value(&self) -> Option<f64> {
        match self {
            ThetaPlus::Fold(v) => Some(*v),
            _ => None,
        }
    }
}

/// Continues the uniform state from `θ = 0` until the first fold or the
/// upper parameter limit.
pub fn theta_plus(model: &ModelSpec, grid: Grid1D, settings: &ContinuationSettings) -> Result<ThetaPlus> {
    let model = model.with_theta(0.0);
    let problem = RdProblem::theta(model, grid);
    let u0 = crate::grid::StateVector::uniform(grid, model.uniform_steady_state()?);
    let settings = ContinuationSettings { stop_at_first_fold: true, ..settings.clone() };
    let branch = continue_branch(&problem, BranchPoint::new(0.0, u0.into_values()), &settings)?;
    Ok(match branch.termination {
        Termination::Fold { param } => ThetaPlus::Fold(param),
        Termination::ParamLimit { .. } => ThetaPlus::NoFold,
        Termination::ClosedLoop { .. } | Termination::StabilityChange { .. } => ThetaPlus::NoFold,
        Termination::MaxPoints => ThetaPlus::Unresolved { param: branch.points.last().map_or(0.0, |p| p.param) },
        Termination::Unresolved { param, .. } => ThetaPlus::Unresolved { param },
    })
}
