//! Gradient estimators: unbiasedness and the one-step contraction, by exact enumeration.

use decoupling::estimators::{EstimatorState, SagaMemory, SvrgMemory};
use decoupling::problems::gaussian_vector;
use decoupling::{bregman_divergence, Estimator, EstimatorConstants, EstimatorKind, Result, SmoothTerm, Vector};
use rand::Rng;

use super::instances::{random_quadratic, rng, CheckRng};
use super::{PropertyReport, Tracker};

pub const INSTANCES: usize = 200;

/// `(probability, indices, svrg refresh)` for every outcome of one draw with minibatch `tau ≤ 2`.
fn outcomes(kind: EstimatorKind, n: usize, tau: usize) -> Vec<(f64, Vec<usize>, bool)> {
    let mut draws: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..tau {
        draws = draws.into_iter().flat_map(|d| (0..n).map(move |i| [d.clone(), vec![i]].concat())).collect();
    }
    let p = 1.0 / draws.len() as f64;
    match kind {
        EstimatorKind::Svrg => {
            let q = (tau as f64 / n as f64).min(1.0);
            draws
                .into_iter()
                .flat_map(|d| [(p * q, d.clone(), true), (p * (1.0 - q), d, false)])
                .filter(|(w, _, _)| *w > 0.0)
                .collect()
        }
        _ => draws.into_iter().map(|d| (p, d, false)).collect(),
    }
}

/// An estimator whose memory sits at random points.
fn primed(kind: EstimatorKind, smooth: &SmoothTerm, rng: &mut CheckRng, tau: usize) -> Result<Estimator> {
    let d = smooth.dim();
    let mut est = Estimator::new(kind, smooth, &Vector::zeros(d), tau, 100)?;
    match est.state_mut() {
        EstimatorState::Svrg(mem) => *mem = SvrgMemory::new(smooth, &gaussian_vector(rng, d, 1.0), tau),
        EstimatorState::Saga(mem) => {
            let table = (0..smooth.n()).map(|i| smooth.component_gradient(i, &gaussian_vector(rng, d, 1.0))).collect();
            *mem = SagaMemory::from_table(table)?;
        }
        _ => {}
    }
    Ok(est)
}

/// `‖E v − ∇f(x)‖_∞` over all sample outcomes, `n ≤ 6`; slack `10⁻¹² − error`.
pub fn unbiasedness(kind: EstimatorKind, instances: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = rng(seed);
    let mut t = Tracker::new(format!("estimators.unbiased.{kind}"), 0.0);
    for _ in 0..instances {
        let n = rng.random_range(1..=6);
        let d = rng.random_range(1..=4);
        let tau = rng.random_range(1..=2);
        let smooth = random_quadratic(&mut rng, d, n, 0.0)?;
        let est = primed(kind, &smooth, &mut rng, tau)?;
        let x = gaussian_vector(&mut rng, d, 1.0);
        let mut mean = Vector::zeros(d);
        for (p, idx, refresh) in outcomes(kind, n, tau) {
            mean += est.clone().estimate_with(&smooth, &x, &idx, refresh) * p;
        }
        t.observe(1e-12 - (mean - smooth.gradient(&x)).amax());
    }
    Ok(t.finish())
}

/// Exact `E‖w − w*‖² + E M⁺` against the convex (`μ = 0`) or strongly convex right-hand side at `η = η₀`.
pub fn one_step(kind: EstimatorKind, strongly: bool, instances: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = rng(seed);
    let label = if strongly { "strongly_convex" } else { "convex" };
    let mut t = Tracker::new(format!("estimators.one_step.{kind}.{label}"), -1e-9);
    for _ in 0..instances {
        let n = rng.random_range(1..=6);
        let d = rng.random_range(1..=4);
        let smooth = random_quadratic(&mut rng, d, n, if strongly { 0.1 } else { 0.0 })?;
        let mu = if strongly { smooth.strong_convexity() } else { 0.0 };
        let c = EstimatorConstants::for_kind(kind, smooth.lipschitz(), mu, n);
        let eta = c.eta0;
        let est = primed(kind, &smooth, &mut rng, 1)?;
        let x = gaussian_vector(&mut rng, d, 1.0);
        let xs = gaussian_vector(&mut rng, d, 1.0);
        let w_star = &xs - smooth.gradient(&xs) * eta;
        let m_now = est.m_diagnostic(&smooth, &xs, eta, 0);
        let mut lhs = 0.0;
        for (p, idx, refresh) in outcomes(kind, n, 1) {
            let mut e = est.clone();
            let v = e.estimate_with(&smooth, &x, &idx, refresh);
            let w = &x - v * eta;
            lhs += p * ((w - &w_star).norm_squared() + e.m_diagnostic(&smooth, &xs, eta, 1));
        }
        let dist = (&x - &xs).norm_squared();
        let rhs = if strongly {
            let rho = c.rho.filter(|r| r.is_finite()).unwrap_or(1.0);
            (1.0 - c.omega * eta * mu) * dist + (1.0 - rho) * m_now
        } else {
            dist - c.omega * eta * bregman_divergence(&smooth, &x, &xs)? + m_now
        };
        t.observe(rhs - lhs);
    }
    Ok(t.finish())
}

pub fn suite() -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    for (k, kind) in [EstimatorKind::Full, EstimatorKind::Sgd, EstimatorKind::Svrg, EstimatorKind::Saga]
        .into_iter()
        .enumerate()
    {
        out.push(unbiasedness(kind, INSTANCES, 200 + k as u64)?);
    }
    for (k, kind) in [EstimatorKind::Full, EstimatorKind::Svrg, EstimatorKind::Saga].into_iter().enumerate() {
        out.push(one_step(kind, false, INSTANCES, 300 + k as u64)?);
        out.push(one_step(kind, true, INSTANCES, 310 + k as u64)?);
    }
    Ok(out)
}
