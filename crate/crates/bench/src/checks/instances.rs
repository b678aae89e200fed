//! Random instances shared by the check suites.

use decoupling::problems::{gaussian_matrix, gaussian_vector, rng_from_seed};
use decoupling::prox::{GroupSpec, PiecewiseLinearPhi};
use decoupling::{InnerFunction, Matrix, Problem, ProxTerm, Result, SmoothComponent, SmoothTerm, Vector};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub type CheckRng = ChaCha20Rng;

pub fn rng(seed: u64) -> CheckRng {
    rng_from_seed(seed)
}

/// `GGᵀ/k + ridge·I` with `G` of size `d × k`.
pub fn random_psd(rng: &mut CheckRng, d: usize, k: usize, ridge: f64) -> Matrix {
    let g = gaussian_matrix(rng, d, k, 1.0);
    let h = &g * g.transpose() / k as f64 + Matrix::identity(d, d) * ridge;
    (&h + h.transpose()) * 0.5
}

/// `f = (1/n) Σ ½(x − cᵢ)ᵀHᵢ(x − cᵢ)`; rank-deficient `Hᵢ` when `ridge = 0`.
pub fn random_quadratic(rng: &mut CheckRng, d: usize, n: usize, ridge: f64) -> Result<SmoothTerm> {
    let comps = (0..n)
        .map(|_| {
            let k = rng.random_range(1..=d);
            SmoothComponent::Quadratic { hessian: random_psd(rng, d, k, ridge), center: gaussian_vector(rng, d, 1.0) }
        })
        .collect();
    SmoothTerm::quadratic(d, comps)
}

pub fn log_uniform(rng: &mut CheckRng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn unit(rng: &mut CheckRng, d: usize) -> Vector {
    let a = gaussian_vector(rng, d, 1.0);
    let n = a.norm();
    a / n
}

/// Every toolbox prox family, one random instance per call.
pub const PROX_FAMILIES: [&str; 14] = [
    "zero",
    "l1",
    "hyperplane",
    "affine",
    "slab",
    "hinge",
    "group_norm",
    "distance",
    "piecewise_linear",
    "quadratic_row",
    "squared_distance",
    "composition_l1",
    "composition_point",
    "composition_zero",
];

pub fn random_prox_term(rng: &mut CheckRng, family: &str, d: usize) -> Result<ProxTerm> {
    let k = rng.random_range(1..=d.min(3));
    Ok(match family {
        "zero" => ProxTerm::zero(d),
        "l1" => ProxTerm::l1(d, log_uniform(rng, 0.1, 10.0))?,
        "hyperplane" => ProxTerm::hyperplane(gaussian_vector(rng, d, 1.0), rng.random_range(-1.0..1.0))?,
        "affine" => {
            let a = gaussian_matrix(rng, d, k, 1.0);
            let b = a.tr_mul(&gaussian_vector(rng, d, 1.0));
            ProxTerm::affine(a, b)?
        }
        "slab" => ProxTerm::slab(gaussian_vector(rng, d, 1.0), rng.random_range(-1.0..1.0), rng.random::<f64>())?,
        "hinge" => {
            let label = if rng.random::<bool>() { 1.0 } else { -1.0 };
            ProxTerm::hinge(gaussian_vector(rng, d, 1.0), label)?
        }
        "group_norm" => {
            let mut idx: Vec<usize> = (0..d).filter(|_| rng.random::<bool>()).collect();
            if idx.is_empty() {
                idx.push(rng.random_range(0..d));
            }
            ProxTerm::group_norm(d, GroupSpec::new(idx, d)?, log_uniform(rng, 0.1, 10.0))?
        }
        "distance" => ProxTerm::distance(gaussian_vector(rng, d, 1.0)),
        "piecewise_linear" => {
            let left = rng.random_range(-2.0..1.0);
            let right = left + rng.random_range(0.01..2.0);
            ProxTerm::piecewise_linear(gaussian_vector(rng, d, 1.0), PiecewiseLinearPhi::new(left, right)?)?
        }
        "quadratic_row" => ProxTerm::quadratic_row(
            gaussian_vector(rng, d, 1.0),
            rng.random_range(-1.0..1.0),
            log_uniform(rng, 0.1, 10.0),
        )?,
        "squared_distance" => ProxTerm::squared_distance(gaussian_vector(rng, d, 1.0), log_uniform(rng, 0.1, 10.0))?,
        "composition_l1" => {
            ProxTerm::composition(gaussian_matrix(rng, d, k, 1.0), InnerFunction::L1 { weight: log_uniform(rng, 0.1, 10.0) })?
        }
        "composition_point" => {
            let a = gaussian_matrix(rng, d, k, 1.0);
            let target = a.tr_mul(&gaussian_vector(rng, d, 1.0));
            ProxTerm::composition(a, InnerFunction::Point { target })?
        }
        "composition_zero" => ProxTerm::composition(gaussian_matrix(rng, d, k, 1.0), InnerFunction::Zero)?,
        other => panic!("unknown prox family {other}"),
    })
}

/// Strongly convex quadratic `f` with `m ∈ [2, 8]` terms drawn from affine constraints (consistent),
/// quadratic rows and squared distances; `R` is `0` or `ℓ₁`. Solvable by the KKT reference.
pub fn random_kkt_problem(seed: u64) -> Result<Problem> {
    let mut rng = rng(seed);
    let d = 6;
    let f = random_quadratic(&mut rng, d, 3, 0.1)?;
    let m = rng.random_range(2..=8);
    let feasible = gaussian_vector(&mut rng, d, 1.0);
    let mut terms = Vec::with_capacity(m);
    for _ in 0..m {
        let term = match rng.random_range(0..4) {
            0 => {
                let a = unit(&mut rng, d);
                let b = a.dot(&feasible);
                ProxTerm::hyperplane(a, b)?
            }
            1 => {
                let a = gaussian_matrix(&mut rng, d, 2, 1.0);
                let b = a.transpose() * &feasible;
                ProxTerm::affine(a, b)?
            }
            2 => ProxTerm::quadratic_row(gaussian_vector(&mut rng, d, 1.0), rng.random_range(-1.0..1.0), 1.0)?,
            _ => ProxTerm::squared_distance(gaussian_vector(&mut rng, d, 1.0), 0.5)?,
        };
        terms.push(term);
    }
    let r = if rng.random::<bool>() { ProxTerm::l1(d, 0.05)? } else { ProxTerm::zero(d) };
    Problem::new(f, terms, r)
}

/// Least squares plus `m` non-smooth `|aⱼᵀx|/2` terms; strongly convex when `ridge > 0`.
pub fn nonsmooth_regression(seed: u64, rows: usize, d: usize, m: usize, ridge: f64, r: ProxTerm) -> Result<Problem> {
    let data = decoupling::problems::gaussian_dataset(rows, d, 0.5, seed)?;
    let f = decoupling::problems::least_squares_term(&data, ridge)?;
    let mut rng = rng(seed.wrapping_add(1));
    let terms = (0..m)
        .map(|_| ProxTerm::piecewise_linear(gaussian_vector(&mut rng, d, 1.0), PiecewiseLinearPhi::abs(0.5)?))
        .collect::<Result<Vec<_>>>()?;
    Problem::new(f, terms, r)
}
