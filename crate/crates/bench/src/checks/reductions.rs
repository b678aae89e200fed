//! Special cases reproduced iterate-for-iterate on shared index streams.

use decoupling::problems::{gaussian_matrix, gaussian_vector};
use decoupling::prox::project_affine_subspace;
use decoupling::reductions::{
    accelerated_kaczmarz_config, dykstra_config, index_stream, kaczmarz_config, point_saga_config,
    run_accelerated_kaczmarz_indexed, run_dykstra_indexed, run_kaczmarz_indexed, run_point_saga_indexed,
    run_sdca_indexed, sdca_config, ReductionConfig,
};
use decoupling::{Matrix, ProxTerm, Result, Solver, Vector};
use rand::Rng;

use super::instances::{random_prox_term, rng, CheckRng};
use super::{PropertyReport, Tracker};

pub const SEEDS: u64 = 20;
pub const ITERATIONS: usize = 1000;

/// `x⁰, x¹, …, x^iters` of the solver under `cfg` with sampling seed `seed`.
pub fn solver_path(cfg: &ReductionConfig, seed: u64, iters: usize) -> Result<Vec<Vector>> {
    let config = cfg.config.clone().with_seed(seed).with_max_iters(iters as u64);
    let mut s = Solver::new(&cfg.problem, config, cfg.estimator)?;
    let mut out = Vec::with_capacity(iters + 1);
    out.push(s.state().x.clone());
    for _ in 0..iters {
        s.step_once()?;
        out.push(s.state().x.clone());
    }
    Ok(out)
}

fn max_deviation(a: &[Vector], b: &[Vector]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(u, v)| (u - v).amax()).fold(0.0, f64::max)
}

fn dims(rng: &mut CheckRng) -> (usize, usize) {
    (rng.random_range(2..=50), rng.random_range(2..=12))
}

const SDCA_FAMILIES: [&str; 8] =
    ["l1", "hyperplane", "slab", "hinge", "group_norm", "distance", "piecewise_linear", "quadratic_row"];

fn consistent_sets(rng: &mut CheckRng, d: usize, m: usize, with_slabs: bool) -> Result<Vec<ProxTerm>> {
    let feasible = gaussian_vector(rng, d, 1.0);
    (0..m)
        .map(|_| match rng.random_range(0..if with_slabs { 3 } else { 2 }) {
            0 => {
                let a = gaussian_vector(rng, d, 1.0);
                let b = a.dot(&feasible);
                ProxTerm::hyperplane(a, b)
            }
            1 => {
                let k = rng.random_range(1..=2.min(d));
                let a = gaussian_matrix(rng, d, k, 1.0);
                let b = a.transpose() * &feasible;
                ProxTerm::affine(a, b)
            }
            _ => {
                let c = gaussian_vector(rng, d, 1.0);
                let r = rng.random_range(0.0..1.0);
                ProxTerm::slab(c.clone(), c.dot(&feasible) + rng.random_range(-r..=r), r)
            }
        })
        .collect()
}

fn consistent_system(rng: &mut CheckRng, d: usize, m: usize) -> (Matrix, Vector) {
    let a = gaussian_matrix(rng, m, d, 1.0);
    let b = &a * gaussian_vector(rng, d, 1.0);
    (a, b)
}

/// Solver vs a standalone implementation for one special case; slack `10⁻¹⁰ − max deviation`.
pub fn equivalence(name: &str, seeds: u64, iters: usize) -> Result<PropertyReport> {
    let mut t = Tracker::new(format!("reductions.{name}"), 0.0);
    for seed in 0..seeds {
        let mut rng = rng(9_000 + seed);
        let (d, m) = dims(&mut rng);
        let x0 = gaussian_vector(&mut rng, d, 1.0);
        let idx = index_stream(m, seed, iters);
        let (ours, theirs) = match name {
            "sdca" => {
                let terms = (0..m)
                    .map(|_| {
                        let fam = SDCA_FAMILIES[rng.random_range(0..SDCA_FAMILIES.len())];
                        random_prox_term(&mut rng, fam, d)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let cfg = sdca_config(terms.clone(), &x0)?;
                (solver_path(&cfg, seed, iters)?, run_sdca_indexed(&terms, &x0, &idx)?)
            }
            "dykstra" => {
                let sets = consistent_sets(&mut rng, d, m, true)?;
                let cfg = dykstra_config(sets.clone(), &x0)?;
                (solver_path(&cfg, seed, iters)?, run_dykstra_indexed(&sets, &x0, &idx)?)
            }
            "kaczmarz" => {
                let (a, b) = consistent_system(&mut rng, d, m);
                let cfg = kaczmarz_config(&a, &b, &x0)?;
                (solver_path(&cfg, seed, iters)?, run_kaczmarz_indexed(&a, &b, &x0, &idx)?)
            }
            "point_saga" => {
                let terms = (0..m)
                    .map(|_| {
                        let fam = SDCA_FAMILIES[rng.random_range(0..SDCA_FAMILIES.len())];
                        random_prox_term(&mut rng, fam, d)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let eta = rng.random_range(0.05..2.0);
                let cfg = point_saga_config(terms.clone(), &x0, eta)?;
                let y0 = vec![Vector::zeros(d); m];
                (solver_path(&cfg, seed, iters)?, run_point_saga_indexed(&terms, &x0, &y0, eta, &idx)?)
            }
            "accelerated_kaczmarz" => {
                let (a, b) = consistent_system(&mut rng, d, m);
                let eta = rng.random_range(0.01..1.0);
                let cfg = accelerated_kaczmarz_config(&a, &b, eta, m)?;
                let params = cfg.params.expect("accelerated parameters");
                (solver_path(&cfg, seed, iters)?, run_accelerated_kaczmarz_indexed(&a, &b, params, &idx)?)
            }
            other => panic!("unknown reduction {other}"),
        };
        t.observe(1e-10 - max_deviation(&ours, &theirs));
    }
    Ok(t.finish())
}

/// Randomized Dykstra over affine sets approaches the exact projection of `x⁰` onto their
/// intersection; slack `10⁻⁶ − ‖x^iters − Π(x⁰)‖`.
pub fn dykstra_limit(seeds: u64, iters: usize) -> Result<PropertyReport> {
    let mut t = Tracker::new("reductions.dykstra_limit", 0.0);
    for seed in 0..seeds {
        let mut rng = rng(9_500 + seed);
        let d = rng.random_range(4..=20);
        let m = rng.random_range(2..=d / 2);
        let sets = consistent_sets(&mut rng, d, m, false)?;
        let x0 = gaussian_vector(&mut rng, d, 1.0);
        let mut cols: Vec<Vector> = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        for s in &sets {
            let c = s.affine_constraint().expect("affine set");
            cols.extend(c.matrix().column_iter().map(|col| col.into_owned()));
            offsets.extend(c.offset().iter());
        }
        let exact = project_affine_subspace(&x0, &Matrix::from_columns(&cols), &Vector::from_vec(offsets))?;
        let cfg = dykstra_config(sets, &x0)?;
        let path = solver_path(&cfg, seed, iters)?;
        t.observe(1e-6 - (path.last().expect("nonempty") - exact).norm());
    }
    Ok(t.finish())
}

pub const EQUIVALENCES: [&str; 5] = ["sdca", "dykstra", "kaczmarz", "point_saga", "accelerated_kaczmarz"];

pub fn suite() -> Result<Vec<PropertyReport>> {
    let mut out = Vec::new();
    for name in EQUIVALENCES {
        out.push(equivalence(name, SEEDS, ITERATIONS)?);
    }
    out.push(dykstra_limit(SEEDS, 10_000)?);
    Ok(out)
}
