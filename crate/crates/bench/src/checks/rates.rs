//! Convergence-rate shapes: slopes, geometric decay and plateau scaling at desk scale.

use decoupling::problems::{gaussian_dataset, gaussian_matrix, gaussian_vector, least_squares_term, rng_from_seed};
use decoupling::prox::PiecewiseLinearPhi;
use decoupling::solver::{gamma, linear_rate};
use decoupling::{
    bregman_divergence, reference_solution, EstimatorKind, Matrix, Problem, ProjectionMode, ProxTerm, Reference, Result,
    Sampling, Schedule, SmoothComponent, SmoothTerm, Solver, StepConfig, Vector,
};
use rand::Rng;

use super::{PropertyReport, Tracker};

/// Least-squares slope of `ys` against `xs`.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// 21 log-spaced iteration counts from `10³` to `10⁵`.
pub fn log_checkpoints() -> Vec<u64> {
    (0..=20).map(|k| (1e3 * 100f64.powf(k as f64 / 20.0)).round() as u64).collect()
}

fn dist_sq(s: &Solver, r: &Reference) -> f64 {
    (&s.state().x - &r.x).norm_squared()
}

/// Strongly convex quadratic with spectrum in `[0.01, 1]` (`d = 50`) and 30 unit hyperplanes,
/// 10 of which are combinations of the other 20.
pub fn redundant_constraints_problem(seed: u64) -> Result<Problem> {
    let d = 50;
    let mut rng = rng_from_seed(seed);
    let q = gaussian_matrix(&mut rng, d, d, 1.0).qr().q();
    let lam = Vector::from_fn(d, |i, _| 0.01 + 0.99 * i as f64 / (d - 1) as f64);
    let h = &q * Matrix::from_diagonal(&lam) * q.transpose();
    let h = (&h + h.transpose()) * 0.5;
    let comps = (0..10)
        .map(|_| SmoothComponent::Quadratic { hessian: h.clone(), center: gaussian_vector(&mut rng, d, 1.0) })
        .collect();
    let f = SmoothTerm::quadratic(d, comps)?;
    let base = gaussian_matrix(&mut rng, 20, d, 1.0);
    let feasible = gaussian_vector(&mut rng, d, 1.0);
    let mut terms = Vec::with_capacity(30);
    for i in 0..30 {
        let a: Vector = if i < 20 { base.row(i).transpose() } else { base.transpose() * gaussian_vector(&mut rng, 20, 1.0) };
        let a = &a / a.norm();
        let b = a.dot(&feasible);
        terms.push(ProxTerm::hyperplane(a, b)?);
    }
    Problem::new(f, terms, ProxTerm::zero(d))
}

/// SAGA at `η₀` on [`redundant_constraints_problem`]: reaches `10⁻¹²·initial`, negative fitted
/// log-error slope, and `err(2T) ≤ ½ err(T)` at `T` half the hitting time.
pub fn linear_constraints(seeds: u64) -> Result<PropertyReport> {
    let mut t = Tracker::new("rates.linear_constraints", 0.0);
    for seed in 1..=seeds {
        let problem = redundant_constraints_problem(seed)?;
        let r = reference_solution(&problem)?;
        let mut cfg = StepConfig::default()
            .with_max_iters(400_000)
            .with_seed(seed)
            .with_stride(100)
            .with_mode(ProjectionMode::LinearConstraints);
        cfg.schedule = Schedule::Constant { eta: None };
        cfg.tol = 0.0;
        let mut s = Solver::new(&problem, cfg, EstimatorKind::Saga)?;
        let mut errs = vec![dist_sq(&s, &r)];
        let d0 = errs[0];
        while errs.last().copied().unwrap_or(0.0) > 1e-12 * d0 && errs.len() < 4_001 {
            for _ in 0..100 {
                s.step_once()?;
            }
            errs.push(dist_sq(&s, &r));
        }
        let hit = errs.len() - 1;
        let reached = errs[hit] <= 1e-12 * d0;
        let xs: Vec<f64> = (0..=hit).map(|k| (100 * k) as f64).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let slope = fitted_slope(&xs, &ys);
        let half = hit / 2;
        let ratio = errs[2 * half] / errs[half];
        let slack = if reached { (-slope).min(0.5 - ratio) } else { f64::NEG_INFINITY };
        t.observe(slack);
    }
    Ok(t.finish())
}

/// Strongly convex least squares plus `|aⱼᵀx|/2` terms.
pub fn nonsmooth_strongly_convex() -> Result<Problem> {
    let d = 20;
    let data = gaussian_dataset(40, d, 0.5, 7)?;
    let f = least_squares_term(&data, 0.1)?;
    let mut rng = rng_from_seed(8);
    let terms = (0..10)
        .map(|_| ProxTerm::piecewise_linear(gaussian_vector(&mut rng, d, 1.0), PiecewiseLinearPhi::abs(0.5)?))
        .collect::<Result<Vec<_>>>()?;
    Problem::new(f, terms, ProxTerm::zero(d))
}

/// Convex (`μ = 0`, fewer rows than columns) variant with an `ℓ₁` regularizer.
pub fn nonsmooth_convex() -> Result<Problem> {
    let d = 20;
    let data = gaussian_dataset(12, d, 0.5, 7)?;
    let f = least_squares_term(&data, 0.0)?;
    let mut rng = rng_from_seed(8);
    let terms = (0..10)
        .map(|_| ProxTerm::piecewise_linear(gaussian_vector(&mut rng, d, 1.0), PiecewiseLinearPhi::abs(0.5)?))
        .collect::<Result<Vec<_>>>()?;
    Problem::new(f, terms, ProxTerm::l1(d, 0.05)?)
}

/// Decreasing schedule on [`nonsmooth_strongly_convex`]: slope of log of the seed-averaged
/// `‖xᵗ − x*‖²` vs `log t`; slack `−1.6 − slope`.
pub fn decreasing_schedule(seeds: u64) -> Result<(PropertyReport, f64)> {
    let problem = nonsmooth_strongly_convex()?;
    let r = reference_solution(&problem)?;
    let checkpoints = log_checkpoints();
    let mut avg = vec![0.0; checkpoints.len()];
    for seed in 0..seeds {
        let mut cfg = StepConfig::default().with_max_iters(*checkpoints.last().unwrap()).with_seed(seed);
        cfg.schedule = Schedule::DecreasingA { a: None };
        let mut s = Solver::new(&problem, cfg, EstimatorKind::Saga)?;
        let mut t = 0;
        for (k, &c) in checkpoints.iter().enumerate() {
            while t < c {
                s.step_once()?;
                t += 1;
            }
            avg[k] += dist_sq(&s, &r) / seeds as f64;
        }
    }
    let xs: Vec<f64> = checkpoints.iter().map(|&c| (c as f64).ln()).collect();
    let ys: Vec<f64> = avg.iter().map(|v| v.ln()).collect();
    let slope = fitted_slope(&xs, &ys);
    let mut t = Tracker::new("rates.decreasing_schedule_slope", 0.0);
    t.observe(-1.6 - slope);
    Ok((t.finish(), slope))
}

/// Constant `η₀` SAGA on [`nonsmooth_convex`]: slope of log `D_f(x̄ᵗ, x*)` for the running
/// average `x̄ᵗ` vs `log t`; slack `−0.8 − slope`.
pub fn averaged_bregman_gap() -> Result<(PropertyReport, f64)> {
    let problem = nonsmooth_convex()?;
    let r = reference_solution(&problem)?;
    let checkpoints = log_checkpoints();
    let mut cfg = StepConfig::default().with_max_iters(*checkpoints.last().unwrap()).with_seed(1);
    cfg.schedule = Schedule::Constant { eta: None };
    let mut s = Solver::new(&problem, cfg, EstimatorKind::Saga)?;
    let mut sum = Vector::zeros(problem.dim());
    let mut t = 0;
    let mut gaps = Vec::with_capacity(checkpoints.len());
    for &c in &checkpoints {
        while t < c {
            sum += &s.state().x;
            s.step_once()?;
            t += 1;
        }
        gaps.push(bregman_divergence(problem.smooth(), &(&sum / t as f64), &r.x)?);
    }
    let xs: Vec<f64> = checkpoints.iter().map(|&c| (c as f64).ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|v| v.ln()).collect();
    let slope = fitted_slope(&xs, &ys);
    let mut tr = Tracker::new("rates.averaged_bregman_slope", 0.0);
    tr.observe(-0.8 - slope);
    Ok((tr.finish(), slope))
}

/// Least squares with `σ* > 0` and three hyperplanes.
pub fn sgd_instance() -> Result<Problem> {
    let d = 10;
    let data = gaussian_dataset(50, d, 0.5, 3)?;
    let f = least_squares_term(&data, 0.1)?;
    let mut rng = rng_from_seed(4);
    let terms =
        (0..3).map(|_| ProxTerm::hyperplane(gaussian_vector(&mut rng, d, 1.0), 0.3)).collect::<Result<Vec<_>>>()?;
    Problem::new(f, terms, ProxTerm::zero(d))
}

/// Seed-averaged plateau of `‖xᵗ − x*‖²` for constant-η SGD at `η₀, η₀/2, η₀/4`; each halving must
/// scale the plateau by a factor in `[0.35, 0.65]`.
pub fn sgd_plateau(seeds: u64) -> Result<(PropertyReport, Vec<f64>)> {
    let problem = sgd_instance()?;
    let r = reference_solution(&problem)?;
    let eta0 = 0.25 / problem.smooth().lipschitz();
    let mu = problem.smooth().strong_convexity();
    let mut plateaus = Vec::new();
    for eta in [eta0, eta0 / 2.0, eta0 / 4.0] {
        let burn = (20.0 / (eta * mu)) as u64;
        let mut acc = 0.0;
        for seed in 0..seeds {
            let cfg = StepConfig::constant(eta).with_max_iters(2 * burn).with_seed(seed);
            let mut s = Solver::new(&problem, cfg, EstimatorKind::Sgd)?;
            for _ in 0..burn {
                s.step_once()?;
            }
            let mut w = 0.0;
            for _ in 0..burn {
                s.step_once()?;
                w += dist_sq(&s, &r);
            }
            acc += w / burn as f64 / seeds as f64;
        }
        plateaus.push(acc);
    }
    let ratios: Vec<f64> = plateaus.windows(2).map(|w| w[1] / w[0]).collect();
    let mut t = Tracker::new("rates.sgd_plateau_ratio", 0.0);
    for &q in &ratios {
        t.observe((q - 0.35).min(0.65 - q));
    }
    Ok((t.finish(), ratios))
}

/// Least squares plus eight weighted `½w(aⱼᵀx − bⱼ)²` terms.
pub fn smooth_terms_instance() -> Result<Problem> {
    let d = 20;
    let data = gaussian_dataset(30, d, 0.5, 3)?;
    let f = least_squares_term(&data, 0.1)?;
    let mut rng = rng_from_seed(4);
    let terms = (0..8)
        .map(|_| {
            let a = gaussian_vector(&mut rng, d, 1.0);
            let w = 0.5 + 4.5 * rng.random::<f64>();
            ProxTerm::quadratic_row(a, rng.random::<f64>(), w)
        })
        .collect::<Result<Vec<_>>>()?;
    Problem::new(f, terms, ProxTerm::zero(d))
}

/// SAGA with `pⱼ ∝ Lⱼ`: iterations to `10⁻¹⁰·initial` against three times the budget
/// `log(𝓛⁰/(10⁻¹⁰‖x⁰ − x*‖²)) / −log(1 − rate)`; slack `1 − hit/(3·budget)`.
pub fn smooth_terms(seeds: u64) -> Result<PropertyReport> {
    let problem = smooth_terms_instance()?;
    let r = reference_solution(&problem)?;
    let mut t = Tracker::new("rates.smooth_terms_budget", 0.0);
    for seed in 0..seeds {
        let mut cfg = StepConfig::default().with_seed(seed).with_sampling(Sampling::BySmoothness);
        cfg.schedule = Schedule::Constant { eta: None };
        let mut s = Solver::new(&problem, cfg, EstimatorKind::Saga)?;
        let eta = s.eta();
        let g = gamma(&problem, eta, s.probabilities());
        let rate: f64 = linear_rate(s.constants(), eta, problem.smooth().strong_convexity(), g, problem.m());
        let rec = s.record(Some(&r))?;
        let l0 = rec.lyap_total.unwrap_or(f64::INFINITY);
        let d0 = rec.dist_sq.unwrap_or(f64::INFINITY);
        let budget = ((l0 / (1e-10 * d0)).ln() / -(1.0 - rate).ln()).ceil();
        let cap = (3.0 * budget) as u64;
        let mut hit = None;
        for k in 1..=cap {
            s.step_once()?;
            if dist_sq(&s, &r) <= 1e-10 * d0 {
                hit = Some(k);
                break;
            }
        }
        t.observe(hit.map_or(f64::NEG_INFINITY, |h| 1.0 - h as f64 / (3.0 * budget)));
    }
    Ok(t.finish())
}

pub fn suite() -> Result<Vec<PropertyReport>> {
    Ok(vec![
        linear_constraints(3)?,
        decreasing_schedule(20)?.0,
        averaged_bregman_gap()?.0,
        sgd_plateau(20)?.0,
        smooth_terms(3)?,
    ])
}
