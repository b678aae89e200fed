use crate::error::{check_dim, Error, Result};
use crate::estimators::EstimatorConstants;
use crate::linalg::Vector;
use crate::problem::Problem;
use crate::state::SolverState;

use super::{step, Reference};

/// Components of `𝓛 = ‖x − x*‖² + M + Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovBreakdown {
    pub dist_sq: f64,
    pub m: f64,
    pub y: f64,
    pub total: f64,
    pub gamma: f64,
}

/// `γ = minⱼ 1/(ηⱼ Lⱼ)` with `ηⱼ = η/(m pⱼ)`; `0` when some `Lⱼ = +∞`.
pub fn gamma(problem: &Problem, eta: f64, probs: &[f64]) -> f64 {
    let m = problem.m();
    problem
        .prox_terms()
        .iter()
        .zip(probs)
        .map(|(g, &p)| {
            let l = g.smoothness();
            let eta_j = eta / (m as f64 * p);
            if l == f64::INFINITY {
                0.0
            } else {
                1.0 / (eta_j * l)
            }
        })
        .fold(f64::INFINITY, f64::min)
        .min(if m == 0 { 0.0 } else { f64::INFINITY })
}

/// `min{ωημ, ρ, γ/(m(1+γ))}`
pub fn linear_rate(constants: &EstimatorConstants, eta: f64, mu: f64, gamma: f64, m: usize) -> f64 {
    let rho = constants.rho.unwrap_or(0.0);
    let dual = if m == 0 {
        f64::INFINITY
    } else if gamma.is_infinite() {
        1.0 / m as f64
    } else {
        gamma / (m as f64 * (1.0 + gamma))
    };
    (constants.omega * eta * mu).min(rho).min(dual)
}

fn weighted_dual_distance(state: &SolverState, reference: &Reference, eta: f64, probs: &[f64]) -> Vec<f64> {
    let m = state.m() as f64;
    state
        .y
        .iter()
        .zip(&reference.y)
        .zip(probs)
        .map(|((y, ys), &p)| {
            let eta_k = eta / (m * p);
            eta_k * eta_k * (y - ys).norm_squared()
        })
        .collect()
}

fn scaled(gamma: f64, v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        (1.0 + gamma) * v
    }
}

/// Lyapunov components at `state` for stepsize `η`, given the memory term `M`.
pub fn lyapunov(
    state: &SolverState,
    problem: &Problem,
    reference: &Reference,
    eta: f64,
    probs: &[f64],
    m_term: f64,
) -> Result<LyapunovBreakdown> {
    check_dim(problem.dim(), state.dim())?;
    if state.m() != problem.m() || reference.y.len() != problem.m() || probs.len() != problem.m() {
        return Err(Error::arg("dual table, reference and probabilities must all have m entries"));
    }
    let g = gamma(problem, eta, probs);
    let dist_sq = (&state.x - &reference.x).norm_squared();
    let y: f64 = weighted_dual_distance(state, reference, eta, probs).into_iter().map(|v| scaled(g, v)).sum();
    Ok(LyapunovBreakdown { dist_sq, m: m_term, y, total: dist_sq + m_term + y, gamma: g })
}

/// Bound minus exact expectation (over `j`) of `‖xᵗ⁺¹ − x*‖² + Yᵗ⁺¹` for the step with estimate `v`.
pub fn key_lemma_check(
    state: &SolverState,
    problem: &Problem,
    eta: f64,
    probs: &[f64],
    v: &Vector,
    reference: &Reference,
) -> Result<f64> {
    let m = problem.m();
    if m > 8 {
        return Err(Error::arg(format!("exact enumeration supports m ≤ 8, got {m}")));
    }
    if state.m() != m || reference.y.len() != m || probs.len() != m {
        return Err(Error::arg("dual table, reference and probabilities must all have m entries"));
    }
    check_dim(problem.dim(), v.len())?;
    let g = gamma(problem, eta, probs);
    let per_term = weighted_dual_distance(state, reference, eta, probs);
    let y_now: f64 = per_term.iter().map(|&v| scaled(g, v)).sum();

    let w = &state.x - v * eta;
    let w_star = &reference.x - problem.smooth().gradient(&reference.x) * eta;

    let mut expectation = 0.0;
    let mut z_ref = None;
    if m == 0 {
        let mut s = state.clone();
        let out = step(&mut s, problem, eta, probs, v, 0)?;
        expectation = (&s.x - &reference.x).norm_squared();
        z_ref = Some(out.z);
    }
    for j in 0..m {
        let mut s = state.clone();
        let out = step(&mut s, problem, eta, probs, v, j)?;
        let eta_j = eta / (m as f64 * probs[j]);
        let y_next = y_now - scaled(g, per_term[j])
            + scaled(g, eta_j * eta_j * (&s.y[j] - &reference.y[j]).norm_squared());
        expectation += probs[j] * ((&s.x - &reference.x).norm_squared() + y_next);
        z_ref.get_or_insert(out.z);
    }
    let z = z_ref.expect("at least one step evaluated");
    let coeff = if m == 0 { 1.0 } else { 1.0 - g / (m as f64 * (1.0 + g)) };
    let coeff = if g.is_infinite() { 1.0 - 1.0 / m.max(1) as f64 } else { coeff };
    let bound = (&w - &w_star).norm_squared() + coeff * y_now - (&z - &w - (&reference.x - &w_star)).norm_squared();
    Ok(bound - expectation)
}

/// `(‖x* − prox_{ηR}(x* − η∇f(x*) − ηȳ*)‖, maxⱼ ‖x* − prox_{ηⱼgⱼ}(x* + ηⱼyⱼ*)‖)`
pub fn fixed_point_residuals(problem: &Problem, reference: &Reference, eta: f64, eta_j: f64) -> Result<(f64, f64)> {
    let xs = &reference.x;
    check_dim(problem.dim(), xs.len())?;
    if reference.y.len() != problem.m() {
        return Err(Error::arg("reference must carry m duals"));
    }
    let y_bar = reference.y_bar();
    let arg = xs - (problem.smooth().gradient(xs) + y_bar) * eta;
    let r = problem.regularizer().prox(&arg, eta)?;
    let res_r = (xs - r).norm();
    let mut res_g: f64 = 0.0;
    for (g, y) in problem.prox_terms().iter().zip(&reference.y) {
        let p = g.prox(&(xs + y * eta_j), eta_j)?;
        res_g = res_g.max((xs - p).norm());
    }
    Ok((res_r, res_g))
}
