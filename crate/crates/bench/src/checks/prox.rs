//! Prox toolbox: firm nonexpansiveness and composition formulas against brute force.

use decoupling::problems::gaussian_vector;
use decoupling::prox::{brute_force_prox, prox_piecewise_linear_composition, PiecewiseLinearPhi};
use decoupling::{InnerFunction, ProxTerm, Result, Vector};
use rand::Rng;

use super::instances::{log_uniform, random_prox_term, rng, CheckRng, PROX_FAMILIES};
use super::{PropertyReport, Tracker};

pub const NONEXP_TRIALS: usize = 10_000;
pub const COMPOSITION_INSTANCES: usize = 100;

/// `‖x − z‖² − c‖(x − p) − (z − q)‖² − ‖p − q‖²` with `c = 1 + 1/(ηL)` for `L`-smooth terms, `1` otherwise.
pub fn nonexpansive_slack(term: &ProxTerm, x: &Vector, z: &Vector, eta: f64) -> Result<f64> {
    let p = term.prox(x, eta)?;
    let q = term.prox(z, eta)?;
    let l = term.smoothness();
    let c = if l.is_finite() && l > 0.0 { 1.0 + 1.0 / (eta * l) } else { 1.0 };
    let res = (x - &p) - (z - &q);
    Ok((x - z).norm_squared() - c * res.norm_squared() - (p - q).norm_squared())
}

fn random_point(rng: &mut CheckRng, d: usize) -> Vector {
    let s = log_uniform(rng, 0.1, 10.0);
    gaussian_vector(rng, d, s)
}

pub fn firm_nonexpansiveness(family: &str, trials: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = rng(seed);
    let mut t = Tracker::new(format!("prox.firm_nonexpansive.{family}"), -1e-9);
    for _ in 0..trials {
        let d = rng.random_range(1..=5);
        let term = random_prox_term(&mut rng, family, d)?;
        let x = random_point(&mut rng, d);
        let z = if rng.random::<f64>() < 0.2 { &x + random_point(&mut rng, d) * 1e-3 } else { random_point(&mut rng, d) };
        let eta = log_uniform(&mut rng, 1e-2, 1e2);
        t.observe(nonexpansive_slack(&term, &x, &z, eta)?);
    }
    Ok(t.finish())
}

/// Reduced-formula prox of `φ(Aᵀx)` (general `A` with ℓ₁ inner, and the piecewise-linear closed
/// form) against nested golden-section search; slack `10⁻⁶ − max error`.
pub fn composition_vs_brute_force(instances: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = rng(seed);
    let mut t = Tracker::new("prox.composition_vs_brute_force", 0.0);
    for k in 0..instances {
        let d = rng.random_range(1..=3);
        let term = if k % 2 == 0 {
            let dj = rng.random_range(1..=d);
            let a = decoupling::problems::gaussian_matrix(&mut rng, d, dj, 1.0);
            ProxTerm::composition(a, InnerFunction::L1 { weight: log_uniform(&mut rng, 0.1, 3.0) })?
        } else {
            let left = rng.random_range(-2.0..1.0);
            let right = left + rng.random_range(0.1..2.0);
            ProxTerm::piecewise_linear(gaussian_vector(&mut rng, d, 1.0), PiecewiseLinearPhi::new(left, right)?)?
        };
        let x = gaussian_vector(&mut rng, d, 2.0);
        let eta = log_uniform(&mut rng, 0.1, 3.0);
        let fast = term.prox(&x, eta)?;
        let value = |u: &Vector| term.value(u);
        let slow = brute_force_prox(&x, &value, eta, 1e-11)?;
        t.observe(1e-6 - (fast - slow).amax());
    }
    Ok(t.finish())
}

/// Inputs landing in the middle branch map to `aᵀu = 0`; slack `10⁻¹⁰ − |aᵀu|`.
pub fn piecewise_middle_branch(instances: usize, seed: u64) -> Result<PropertyReport> {
    let mut rng = rng(seed);
    let mut t = Tracker::new("prox.piecewise_middle_branch", 0.0);
    for _ in 0..instances {
        let d = rng.random_range(1..=5);
        let a = gaussian_vector(&mut rng, d, 1.0);
        let left = rng.random_range(-2.0..0.5);
        let right = left + rng.random_range(0.1..2.0);
        let phi = PiecewiseLinearPhi::new(left, right)?;
        let eta = log_uniform(&mut rng, 0.1, 10.0);
        let nsq = a.norm_squared();
        let target = eta * nsq * (left + rng.random::<f64>() * (right - left));
        let mut x = gaussian_vector(&mut rng, d, 1.0);
        x += &a * ((target - a.dot(&x)) / nsq);
        let u = prox_piecewise_linear_composition(&x, &a, &phi, eta)?;
        t.observe(1e-10 - a.dot(&u).abs());
    }
    Ok(t.finish())
}

pub fn suite() -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    for (k, family) in PROX_FAMILIES.iter().enumerate() {
        out.push(firm_nonexpansiveness(family, NONEXP_TRIALS, 100 + k as u64)?);
    }
    out.push(composition_vs_brute_force(COMPOSITION_INSTANCES, 7)?);
    out.push(piecewise_middle_branch(COMPOSITION_INSTANCES, 8)?);
    Ok(out)
}
