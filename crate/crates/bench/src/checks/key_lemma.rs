//! Optimality identities and the one-iteration key inequality along real trajectories.

use decoupling::problems::gaussian_vector;
use decoupling::solver::fixed_point_residuals;
use decoupling::{key_lemma_check, reference_solution, EstimatorKind, Result, Sampling, Solver, StepConfig};
use rand::Rng;

use super::instances::{random_kkt_problem, rng};
use super::{PropertyReport, Tracker};

pub const STEPS: [f64; 3] = [0.1, 1.0, 10.0];

/// `x* = prox_{ηR}(x* − η∇f(x*) − ηȳ*)` and `x* = prox_{ηⱼgⱼ}(x* + ηⱼyⱼ*)` for every `η, ηⱼ` in
/// [`STEPS`] and every `j`; slack `10⁻⁸ − residual`.
pub fn fixed_points(problems: usize, seed: u64) -> Result<PropertyReport> {
    let mut t = Tracker::new("key_lemma.fixed_point_identities", 0.0);
    for k in 0..problems as u64 {
        let problem = random_kkt_problem(seed + k)?;
        let reference = reference_solution(&problem)?;
        for eta in STEPS {
            for eta_j in STEPS {
                let (res_r, res_g) = fixed_point_residuals(&problem, &reference, eta, eta_j)?;
                t.observe(1e-8 - res_r.max(res_g));
            }
        }
    }
    Ok(t.finish())
}

/// Exact expectation over `j` of the key inequality at each of `steps` consecutive SAGA iterates.
pub fn key_lemma(problems: usize, steps: usize, seed: u64) -> Result<PropertyReport> {
    let mut t = Tracker::new("key_lemma.slack", -1e-9);
    for k in 0..problems as u64 {
        let problem = random_kkt_problem(seed + k)?;
        let reference = reference_solution(&problem)?;
        let mut r = rng(seed + k);
        let m = problem.m();
        let mut config = StepConfig::default()
            .with_seed(k)
            .with_max_iters(steps as u64)
            .with_x0(gaussian_vector(&mut r, problem.dim(), 2.0));
        if k % 2 == 1 {
            let w: Vec<f64> = (0..m).map(|_| r.random_range(0.2..1.0)).collect();
            let total: f64 = w.iter().sum();
            config = config.with_sampling(Sampling::Explicit(w.iter().map(|v| v / total).collect()));
        }
        config.schedule = decoupling::Schedule::Constant { eta: None };
        let mut solver = Solver::new(&problem, config, EstimatorKind::Saga)?;
        for _ in 0..steps {
            let eta = solver.eta();
            let v = solver.estimate();
            t.observe(key_lemma_check(solver.state(), &problem, eta, solver.probabilities(), &v, &reference)?);
            let j = solver.sample_j();
            solver.apply(&v, j)?;
        }
    }
    Ok(t.finish())
}

pub fn suite() -> Result<Vec<PropertyReport>> {
    Ok(vec![fixed_points(10, 500)?, key_lemma(10, 200, 600)?])
}
