//! End-to-end checks of the solver stack, one line per check.
//!
//! Runs without the libtest harness so each line prints as it finishes.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hetturing::continuation::{
    continue_branch, euler_predict, theta_plus, BranchPoint, ContinuationSettings, Termination, ThetaPlus,
};
use hetturing::experiments::critical_length::critical_length_cell;
use hetturing::experiments::simulate::simulate_model;
use hetturing::experiments::{
    auto_grid_points, run_bifurcation, worker_count, run_fold_scan, CellStatus, CriticalStatus, ExperimentConfig, ModelConfig,
    Spacing, Sweep,
};
use hetturing::integrator::Perturbation;
use hetturing::stability::{dense_spectrum, gamma_instability_roots, stability_verdict, EigenSettings};
use hetturing::{Discretization, Grid1D, ModelSpec, RdProblem, StateVector, SteadyProblem};

type Check = Result<String, String>;

fn schnak(gamma: f64) -> ModelSpec {
    ModelSpec::schnakenberg(0.8, 1.0 / 40.0, gamma).unwrap()
}

fn gm(gamma: f64) -> ModelSpec {
    ModelSpec::gierer_meinhardt(0.1, 1.0, 20.0, gamma).unwrap()
}

fn grid(n: usize) -> Grid1D {
    Grid1D::new(n).unwrap()
}

fn uniform(model: &ModelSpec, g: Grid1D) -> Vec<f64> {
    StateVector::uniform(g, model.uniform_steady_state().unwrap()).into_values()
}

fn max_u(values: &[f64]) -> f64 {
    values[..values.len() / 2].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn theta_plus_at(model: &ModelSpec, g: Grid1D, settings: &ContinuationSettings) -> Result<ThetaPlus, String> {
    theta_plus(model, g, settings).map_err(|e| e.to_string())
}

fn fold_locations() -> Check {
    let settings = ContinuationSettings::theta_plus_defaults();
    let mut notes = Vec::new();
    for (gamma, target) in [(1.0, 0.09), (9.0, 0.12)] {
        let t0 = Instant::now();
        let tp = theta_plus_at(&schnak(gamma), grid(201), &settings)?;
        let secs = t0.elapsed().as_secs_f64();
        let ThetaPlus::Fold(t) = tp else { return Err(format!("gamma {gamma}: {tp:?}")) };
        ensure((t - target).abs() <= 0.02, format!("gamma {gamma}: theta+ = {t:.5}, want {target} +- 0.02"))?;
        ensure(secs < 30.0, format!("gamma {gamma}: {secs:.1} s"))?;
        notes.push(format!("gamma {gamma}: theta+ {t:.4} ({secs:.1} s)"));
    }
    let model = schnak(900.0);
    let n = auto_grid_points(900.0, model.d());
    let s = ContinuationSettings { param_min: 0.0, param_max: 1.0, ..settings };
    let tp = theta_plus_at(&model, grid(n), &s)?;
    ensure(tp == ThetaPlus::NoFold, format!("gamma 900 on {n} nodes: {tp:?}"))?;
    notes.push(format!("gamma 900: no fold on [0, 1] ({n} nodes)"));
    Ok(notes.join(", "))
}

fn closed_loop() -> Check {
    let t0 = Instant::now();
    let mut config = ExperimentConfig { model: ModelConfig::schnakenberg(0.8, 3.61), ..Default::default() };
    config.numerics.n_points = Some(201);
    config.bifurcation.patterned_seeds = 0;
    let r = run_bifurcation(&config).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let gap = r.closed_loop_gap().ok_or("base branch did not close")?;
    ensure(gap < 1e-5, format!("closure gap {gap:.2e}"))?;
    let extreme = r
        .branches
        .iter()
        .filter(|b| b.label.starts_with("base"))
        .flat_map(|b| b.branch.points.iter())
        .map(|p| p.param.abs())
        .fold(0.0, f64::max);
    ensure((0.03..=0.08).contains(&extreme), format!("extreme |theta| {extreme:.4}"))?;
    ensure(secs < 120.0, format!("{secs:.1} s"))?;
    Ok(format!("gap {gap:.1e}, extreme |theta| {extreme:.4}, {secs:.1} s"))
}

/// Eigenvalues of `-k² D + γ J` for every discrete Neumann wavenumber.
fn mode_union(model: &ModelSpec, n: usize, j: [[f64; 2]; 2]) -> Vec<Complex64> {
    let h = 1.0 / (n - 1) as f64;
    let g = model.gamma();
    let d = model.d();
    let mut out = Vec::new();
    for m in 0..n {
        let s = (m as f64 * PI * h / 2.0).sin();
        let k2 = 4.0 * s * s / (h * h);
        let (a, b, c, e) = (g * j[0][0] - k2, g * j[0][1], g * j[1][0], g * j[1][1] - d * k2);
        let tr = a + e;
        let det = a * e - b * c;
        let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
        out.push((tr + disc) / 2.0);
        out.push((tr - disc) / 2.0);
    }
    out
}

fn dispersion_oracle() -> Check {
    let cases = [
        (schnak(1.0), [[-1.0, -1.6], [1.0, 0.6]]),
        (schnak(9.0), [[-1.0, -1.6], [1.0, 0.6]]),
        (gm(10.0), [[2.0 / 1.1 - 1.0, -1.0 / 1.21], [2.2, -1.0]]),
    ];
    let mut worst = 0.0f64;
    for (model, j) in cases {
        for n in [51, 201] {
            let g = grid(n);
            let jac = Discretization::new(model, g).jacobian(&uniform(&model, g)).map_err(|e| e.to_string())?;
            let mut spec = dense_spectrum(jac.to_dense()).map_err(|e| e.to_string())?;
            spec.sort_by(|a, b| b.re.total_cmp(&a.re));
            let oracle = mode_union(&model, n, j);
            for l in spec.iter().take(10) {
                let near = oracle.iter().map(|o| (o - l).norm()).fold(f64::INFINITY, f64::min);
                worst = worst.max(near / l.norm().max(1e-300));
            }
        }
    }
    ensure(worst < 1e-6, format!("relative error {worst:.2e}"))?;
    let m = schnak(1.0);
    let w1 = gamma_instability_roots(&m, 1).map_err(|e| e.to_string())?.ok_or("no mode-1 window")?;
    let w2 = gamma_instability_roots(&m, 2).map_err(|e| e.to_string())?.ok_or("no mode-2 window")?;
    ensure(w1.0 < 1.0 && 1.0 < w1.1, format!("mode-1 window {w1:?} misses gamma 1"))?;
    ensure(!(w1.0 < 9.0 && 9.0 < w1.1), format!("mode-1 window {w1:?} contains gamma 9"))?;
    ensure(w2.0 < 9.0 && 9.0 < w2.1, format!("mode-2 window {w2:?} misses gamma 9"))?;
    Ok(format!(
        "max relative error {worst:.1e}, m=1 window [{:.3}, {:.3}], m=2 window [{:.3}, {:.3}]",
        w1.0, w1.1, w2.0, w2.1
    ))
}

fn jacobian_fd() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = grid(21);
    let mut worst = 0.0f64;
    for model in [schnak(3.0), gm(5.0)] {
        let disc = Discretization::new(model, g);
        for _ in 0..20 {
            let u: Vec<f64> = (0..g.dofs()).map(|_| rng.gen_range(0.5..1.5)).collect();
            let theta = rng.gen_range(-0.5..0.5);
            let jac = disc.jacobian(&u).map_err(|e| e.to_string())?.to_dense();
            let mut fd = jac.clone();
            for c in 0..u.len() {
                let h = 1e-6 * u[c].abs().max(1.0);
                let (mut up, mut dn) = (u.clone(), u.clone());
                up[c] += h;
                dn[c] -= h;
                let rp = disc.residual(&up, theta).map_err(|e| e.to_string())?;
                let rm = disc.residual(&dn, theta).map_err(|e| e.to_string())?;
                for r in 0..u.len() {
                    fd[(r, c)] = (rp[r] - rm[r]) / (2.0 * h);
                }
            }
            worst = worst.max((&jac - &fd).norm() / jac.norm());
        }
    }
    ensure(worst < 1e-6, format!("relative error {worst:.2e}"))?;
    Ok(format!("max relative error {worst:.1e} over 40 states"))
}

fn predictor_order() -> Check {
    let model = schnak(1.0);
    let g = grid(201);
    let problem = RdProblem::theta(model, g);
    let settings = ContinuationSettings { param_min: 0.0, param_max: 0.04, ..Default::default() };
    let b = continue_branch(&problem, BranchPoint::new(0.0, uniform(&model, g)), &settings).map_err(|e| e.to_string())?;
    let p = b.points.last().ok_or("empty branch")?;
    let res = |dt: f64| -> Result<f64, String> {
        let pred = euler_predict(&problem, p, dt).map_err(|e| e.to_string())?;
        let r = problem.residual(&pred, p.param + dt).map_err(|e| e.to_string())?;
        Ok(r.iter().fold(0.0f64, |m, x| m.max(x.abs())))
    };
    let (r1, r2) = (res(4e-3)?, res(2e-3)?);
    let ratio = r1 / r2;
    ensure((3.5..=4.5).contains(&ratio), format!("ratio {ratio:.3}"))?;
    Ok(format!("at theta {:.4}: residual ratio {ratio:.3}", p.param))
}

fn mirror_symmetry() -> Check {
    let model = schnak(1.0);
    let g = grid(201);
    let problem = RdProblem::theta(model, g);
    let trace = |dir: f64| {
        let s = ContinuationSettings {
            param_min: -1.0,
            param_max: 1.0,
            direction: dir,
            stop_at_first_fold: true,
            track_stability: false,
            ..Default::default()
        };
        continue_branch(&problem, BranchPoint::new(0.0, uniform(&model, g)), &s).map_err(|e| e.to_string())
    };
    let (up, down) = (trace(1.0)?, trace(-1.0)?);
    ensure(up.points.len() == down.points.len(), format!("{} vs {} points", up.points.len(), down.points.len()))?;
    let mut worst_param = 0.0f64;
    let mut worst_state = 0.0f64;
    let mut worst_proj = 0.0f64;
    for (p, q) in up.points.iter().zip(&down.points) {
        let mirror = StateVector::new(g, p.state.clone()).map_err(|e| e.to_string())?.reflected();
        let d = q.state.iter().zip(mirror.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_param = worst_param.max((p.param + q.param).abs());
        worst_state = worst_state.max(d);
        worst_proj = worst_proj.max((max_u(&q.state) - max_u(&p.state)).abs());
    }
    ensure(worst_param < 1e-8, format!("parameters differ by {worst_param:.2e}"))?;
    let fold = |b: &hetturing::continuation::Branch| match b.termination {
        Termination::Fold { param } => Some(param),
        _ => None,
    };
    let (tp, tm) = (fold(&up).ok_or("no fold upwards")?, fold(&down).ok_or("no fold downwards")?);
    ensure(worst_state < 1e-8, format!("reflected states differ by {worst_state:.2e}"))?;
    ensure(worst_proj < 1e-8, format!("max-u differs by {worst_proj:.2e}"))?;
    ensure((tp + tm).abs() < 1e-6, format!("theta+ {tp} vs theta- {tm}"))?;
    Ok(format!("{} points, state {worst_state:.1e}, max-u {worst_proj:.1e}, theta+ {tp:.5} theta- {tm:.5}", up.points.len()))
}

fn critical_config(model: ModelConfig) -> ExperimentConfig {
    let mut c = ExperimentConfig { model: ModelConfig { n: 2, ..model }, ..Default::default() };
    c.numerics.n_points = Some(101);
    c.numerics.continuation.max_step = 0.05;
    c.critical_length.gamma_max = 40.0;
    c
}

fn critical_length() -> Check {
    let cell = |config: &ExperimentConfig, param: &str, v: f64, theta: f64| {
        critical_length_cell(config, param, v, theta).map_err(|e| e.to_string())
    };
    let sc = critical_config(ModelConfig::schnakenberg(0.7, 1.0));
    let near = cell(&sc, "beta0", 0.7, 1e-3)?;
    let (Some(l), Some(l0)) = (near.length, near.homogeneous_length()) else {
        return Err(format!("theta 1e-3: {:?} {}", near.status, near.note));
    };
    let rel = (l - l0).abs() / l0;
    ensure(rel < 0.01, format!("L_c {l:.5} vs {l0:.5} at theta 1e-3"))?;

    let mut pairs = 0;
    let thetas = [1.0 / 6.0, 1.0 / 3.0];
    let mut table = vec![[None; 2]; 3];
    for (i, b0) in [0.7, 0.8, 0.9].into_iter().enumerate() {
        for (j, &t) in thetas.iter().enumerate() {
            let r = cell(&sc, "beta0", b0, t)?;
            ensure(r.status != CriticalStatus::Unresolved, format!("beta0 {b0} theta {t:.3}: {}", r.note))?;
            table[i][j] = r.length;
        }
    }
    for j in 0..2 {
        let found: Vec<f64> = table.iter().filter_map(|r| r[j]).collect();
        for w in found.windows(2) {
            pairs += 1;
            ensure(w[1] < w[0], format!("L_c not decreasing in beta0 at theta {:.3}: {found:?}", thetas[j]))?;
        }
    }
    for row in &table {
        if let [Some(a), Some(b)] = row {
            pairs += 1;
            ensure(a < b, format!("L_c not increasing in theta: {row:?}"))?;
        }
    }
    ensure(pairs >= 2, format!("only {pairs} comparable pairs: {table:?}"))?;

    let gc = critical_config(ModelConfig::gierer_meinhardt(0.05, 1.0));
    let mut gm_pairs = 0;
    for t in thetas {
        let mut found = Vec::new();
        for a0 in [0.05, 0.15, 0.25] {
            if let Some(l) = cell(&gc, "a0", a0, t)?.length {
                found.push(l);
            }
        }
        for w in found.windows(2) {
            gm_pairs += 1;
            ensure(w[1] > w[0], format!("GM L_c not increasing in a0 at theta {t:.3}: {found:?}"))?;
        }
    }
    ensure(gm_pairs >= 2, format!("only {gm_pairs} GM pairs"))?;
    Ok(format!("theta 1e-3 off by {:.2}%, {pairs} Schnakenberg and {gm_pairs} GM trend pairs", 100.0 * rel))
}

fn scan_structure() -> Check {
    let t0 = Instant::now();
    let config = ExperimentConfig {
        model: ModelConfig::schnakenberg(0.8, 1.0),
        sweeps: vec![Sweep::new("beta0", 0.1, 0.95, 30, Spacing::Linear), Sweep::new("gamma", 0.3, 30.0, 40, Spacing::Log)],
        ..Default::default()
    };
    let scan = run_fold_scan(&config).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let lg: Vec<f64> = scan.p2_values.iter().map(|g| g.ln()).collect();
    let mut rows = 0;
    let mut off = Vec::new();
    for (i, &b0) in scan.p1_values.iter().enumerate() {
        let model = ModelSpec::schnakenberg(b0, 1.0 / 40.0, 1.0).unwrap();
        let any_window = (1..=10).any(|m| gamma_instability_roots(&model, m).unwrap().is_some());
        let cells: Vec<_> = (0..lg.len()).map(|j| &scan.cell(i, j).status).collect();
        if !any_window {
            let bad = cells.iter().filter(|s| !matches!(s, CellStatus::NoFold)).count();
            ensure(bad == 0, format!("beta0 {b0:.3}: {bad} cells without a window report {:?}", cells))?;
            continue;
        }
        let Some((lo, _)) = gamma_instability_roots(&model, 1).unwrap() else { continue };
        let Some((jmin, _)) = cells
            .iter()
            .enumerate()
            .filter_map(|(j, s)| s.theta_plus().map(|t| (j, t)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            continue;
        };
        if lo < scan.p2_values[0] || lo > *scan.p2_values.last().unwrap() {
            continue;
        }
        let jlo = lg.iter().enumerate().min_by(|a, b| (a.1 - lo.ln()).abs().total_cmp(&(b.1 - lo.ln()).abs())).unwrap().0;
        rows += 1;
        if jmin.abs_diff(jlo) > 2 {
            let nearest = (1..=10)
                .filter_map(|m| gamma_instability_roots(&model, m).unwrap().map(|w| (m, w)))
                .flat_map(|(m, (a, b))| [(m, "lower", a), (m, "upper", b)])
                .min_by(|a, b| (a.2 / scan.p2_values[jmin]).ln().abs().total_cmp(&(b.2 / scan.p2_values[jmin]).ln().abs()))
                .unwrap();
            off.push(format!(
                "beta0 {b0:.3}: minimum {:.1e} at gamma {:.3} (nearest root m={} {} {:.3}), m=1 lower root {lo:.3}",
                scan.cell(i, jmin).status.theta_plus().unwrap(),
                scan.p2_values[jmin],
                nearest.0,
                nearest.1,
                nearest.2
            ));
        }
    }
    ensure(rows > 0, "no row with an m=1 root in range".into())?;
    ensure(off.is_empty(), format!("{} of {rows} rows off the locus: {}", off.len(), off.join("; ")))?;
    ensure(secs < 1800.0, format!("{secs:.0} s"))?;
    ensure(scan.failures() == 0, format!("{} failed cells", scan.failures()))?;
    Ok(format!("{rows} rows checked, {secs:.0} s on {} worker(s)", worker_count(&config).unwrap_or(0)))
}

fn step_independence() -> Check {
    let model = schnak(9.0);
    let g = grid(201);
    let mut out = Vec::new();
    for max_step in [1e-1, 1e-3] {
        let s = ContinuationSettings { max_step, initial_step: max_step.min(1e-2), ..ContinuationSettings::theta_plus_defaults() };
        out.push(theta_plus_at(&model, g, &s)?);
    }
    match (out[0], out[1]) {
        (ThetaPlus::Fold(a), ThetaPlus::Fold(b)) => {
            ensure((a - b).abs() < 1e-6, format!("theta+ {a} vs {b}"))?;
            Ok(format!("theta+ {a:.6} and {b:.6}"))
        }
        (ThetaPlus::Unresolved { param }, ThetaPlus::Fold(b)) => Ok(format!("coarse run unresolved at {param}, fine {b:.6}")),
        other => Err(format!("{other:?}")),
    }
}

fn patterned_pipeline() -> Check {
    let config = ExperimentConfig { model: ModelConfig::schnakenberg(0.8, 1.0), ..Default::default() };
    let model = config.model.to_spec().map_err(|e| e.to_string())?;
    let (run, polish, verdict) =
        simulate_model(&config, &model, Perturbation { seed: 1, ..Default::default() }).map_err(|e| e.to_string())?;
    ensure(run.converged, format!("integration stopped at t = {}", run.time))?;
    let p = polish.filter(|p| p.converged).ok_or("polish failed")?;
    let v = verdict.ok_or("no stability verdict")?;
    ensure(v.stable, format!("leading eigenvalue {}", v.leading_real()))?;
    let spread = p.state.max_u() - p.state.min_u();
    ensure(spread > 0.1, format!("max u - min u = {spread}"))?;

    let g = p.state.grid();
    let problem = RdProblem::theta(model, g);
    let mut fold = None;
    for dir in [1.0, -1.0] {
        let s = ContinuationSettings {
            param_min: -1.0,
            param_max: 1.0,
            direction: dir,
            stop_at_first_fold: true,
            track_stability: false,
            ..Default::default()
        };
        let b = continue_branch(&problem, BranchPoint::new(0.0, p.state.values().to_vec()), &s).map_err(|e| e.to_string())?;
        if let Termination::Fold { param } = b.termination {
            fold = Some(param);
        }
    }
    let f = fold.ok_or("patterned branch has no fold")?;
    let ThetaPlus::Fold(tp) = theta_plus_at(&model, g, &ContinuationSettings::theta_plus_defaults())? else {
        return Err("base branch has no fold".into());
    };
    ensure((f.abs() - 0.09).abs() <= 0.02, format!("patterned fold at {f}"))?;
    ensure((f.abs() - tp).abs() < 1e-4, format!("patterned fold {f} vs base theta+ {tp}"))?;
    let jac = Discretization::new(model, g).jacobian(p.state.values()).map_err(|e| e.to_string())?;
    let lead = stability_verdict(&jac, 2, &EigenSettings::default()).map_err(|e| e.to_string())?.leading_real();
    Ok(format!("t = {:.1}, spread {spread:.3}, lead {lead:.3}, fold at {f:.5} (base {tp:.5})", run.time))
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("fold locations", fold_locations),
        ("closed loop", closed_loop),
        ("dispersion oracle", dispersion_oracle),
        ("jacobian vs finite differences", jacobian_fd),
        ("predictor order", predictor_order),
        ("mirror symmetry", mirror_symmetry),
        ("critical length", critical_length),
        ("scan structure", scan_structure),
        ("step-size independence", step_independence),
        ("patterned pipeline", patterned_pipeline),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("[{:>2}] PASS {name}: {msg} [{secs:.1} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[{:>2}] FAIL {name}: {msg} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} check(s) failed");
        std::process::exit(1);
    }
}
