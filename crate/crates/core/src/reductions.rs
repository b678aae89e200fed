//! Classical special cases: configuration constructors and standalone reference implementations.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::estimators::EstimatorKind;
use crate::linalg::{Matrix, Vector};
use crate::problem::{Problem, ProxKind, ProxTerm, SmoothTerm};
use crate::prox::project_hyperplane;
use crate::solver::JSampler;
use crate::state::{Sampling, StepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    Sdca,
    Dykstra,
    Kaczmarz,
    PointSaga,
    DouglasRachford,
    AcceleratedKaczmarz,
}

impl ReductionKind {
    pub const ALL: [ReductionKind; 6] = [
        ReductionKind::Sdca,
        ReductionKind::Dykstra,
        ReductionKind::Kaczmarz,
        ReductionKind::PointSaga,
        ReductionKind::DouglasRachford,
        ReductionKind::AcceleratedKaczmarz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReductionKind::Sdca => "sdca",
            ReductionKind::Dykstra => "dykstra",
            ReductionKind::Kaczmarz => "kaczmarz",
            ReductionKind::PointSaga => "point_saga",
            ReductionKind::DouglasRachford => "douglas_rachford",
            ReductionKind::AcceleratedKaczmarz => "accelerated_kaczmarz",
        }
    }
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReductionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReductionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown reduction '{s}'")))
    }
}

/// A problem plus step configuration reproducing a classical method.
#[derive(Debug, Clone)]
pub struct ReductionConfig {
    pub kind: ReductionKind,
    pub problem: Problem,
    pub config: StepConfig,
    pub estimator: EstimatorKind,
    /// `(α, β, γ)` for accelerated Kaczmarz.
    pub params: Option<(f64, f64, f64)>,
}

fn sdca_like(kind: ReductionKind, terms: Vec<ProxTerm>, x0: &Vector) -> Result<ReductionConfig> {
    let m = terms.len();
    if m == 0 {
        return Err(Error::arg("at least one term is required"));
    }
    for g in &terms {
        check_dim(x0.len(), g.dim())?;
    }
    let d = x0.len();
    let problem = Problem::new(SmoothTerm::half_squared_distance(x0.clone()), terms, ProxTerm::zero(d))?;
    let config = StepConfig::constant(1.0 / m as f64).with_x0(x0.clone()).with_sampling(Sampling::Uniform);
    Ok(ReductionConfig { kind, problem, config, estimator: EstimatorKind::Full, params: None })
}

/// `f = ½‖x − x⁰‖²`, `R ≡ 0`, `η = 1/m`, `y⁰ = 0`, uniform sampling.
pub fn sdca_config(terms: Vec<ProxTerm>, x0: &Vector) -> Result<ReductionConfig> {
    sdca_like(ReductionKind::Sdca, terms, x0)
}

/// SDCA configuration restricted to set indicators.
pub fn dykstra_config(sets: Vec<ProxTerm>, x0: &Vector) -> Result<ReductionConfig> {
    if let Some(g) = sets.iter().find(|g| !is_indicator(g)) {
        return Err(Error::arg(format!("term {:?} is not a set indicator", g.kind())));
    }
    sdca_like(ReductionKind::Dykstra, sets, x0)
}

fn is_indicator(g: &ProxTerm) -> bool {
    matches!(g.kind(), ProxKind::Hyperplane { .. } | ProxKind::Affine(_) | ProxKind::Slab { .. })
}

/// SDCA configuration with row-hyperplane indicators `aⱼᵀx = bⱼ` (rows of `a`).
pub fn kaczmarz_config(a: &Matrix, b: &Vector, x0: &Vector) -> Result<ReductionConfig> {
    let terms = hyperplane_terms(a, b)?;
    sdca_like(ReductionKind::Kaczmarz, terms, x0)
}

fn hyperplane_terms(a: &Matrix, b: &Vector) -> Result<Vec<ProxTerm>> {
    check_dim(a.nrows(), b.len())?;
    (0..a.nrows()).map(|j| ProxTerm::hyperplane(a.row(j).transpose(), b[j])).collect()
}

/// `f ≡ 0`, `R ≡ 0`, zero estimator, uniform sampling.
pub fn point_saga_config(terms: Vec<ProxTerm>, x0: &Vector, eta: f64) -> Result<ReductionConfig> {
    if terms.is_empty() {
        return Err(Error::arg("at least one term is required"));
    }
    let d = x0.len();
    let problem = Problem::new(SmoothTerm::zero(d), terms, ProxTerm::zero(d))?;
    let config = StepConfig::constant(eta).with_x0(x0.clone());
    Ok(ReductionConfig {
        kind: ReductionKind::PointSaga,
        problem,
        config,
        estimator: EstimatorKind::Zero,
        params: None,
    })
}

/// `f ≡ 0`, `m = 1`.
pub fn douglas_rachford_config(g: ProxTerm, r: ProxTerm, x0: &Vector, eta: f64) -> Result<ReductionConfig> {
    let d = x0.len();
    let problem = Problem::new(SmoothTerm::zero(d), vec![g], r)?;
    let config = StepConfig::constant(eta).with_x0(x0.clone());
    Ok(ReductionConfig {
        kind: ReductionKind::DouglasRachford,
        problem,
        config,
        estimator: EstimatorKind::Zero,
        params: None,
    })
}

/// `f = ½‖x‖²`, `R ≡ 0`, row hyperplanes; parameters `(α, β, γ) = (η, 1, 1/(ηn))`.
pub fn accelerated_kaczmarz_config(a: &Matrix, b: &Vector, eta: f64, n: usize) -> Result<ReductionConfig> {
    if !(eta > 0.0) || n == 0 {
        return Err(Error::arg("need η > 0 and n ≥ 1"));
    }
    let terms = hyperplane_terms(a, b)?;
    let d = a.ncols();
    let problem = Problem::new(SmoothTerm::half_squared_distance(Vector::zeros(d)), terms, ProxTerm::zero(d))?;
    let config = StepConfig::constant(eta);
    Ok(ReductionConfig {
        kind: ReductionKind::AcceleratedKaczmarz,
        problem,
        config,
        estimator: EstimatorKind::Full,
        params: Some((eta, 1.0, 1.0 / (eta * n as f64))),
    })
}

/// Uniform index stream shared with a solver run using `seed`.
pub fn index_stream(m: usize, seed: u64, len: usize) -> Vec<usize> {
    JSampler::uniform_sequence(m, seed, len)
}

fn check_indices(indices: &[usize], m: usize) -> Result<()> {
    match indices.iter().find(|&&j| j >= m) {
        Some(j) => Err(Error::arg(format!("index {j} out of range for m = {m}"))),
        None => Ok(()),
    }
}

/// `xᵗ⁺¹ = prox_{(1/m)gⱼ}(xᵗ + ȳⱼᵗ)`, `ȳⱼᵗ⁺¹ = ȳⱼᵗ + xᵗ − xᵗ⁺¹`; returns `x⁰, …, x^T`.
pub fn run_sdca_indexed(terms: &[ProxTerm], x0: &Vector, indices: &[usize]) -> Result<Vec<Vector>> {
    let m = terms.len();
    check_indices(indices, m)?;
    let step = 1.0 / m as f64;
    let mut ybar = vec![Vector::zeros(x0.len()); m];
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(indices.len() + 1);
    out.push(x.clone());
    for &j in indices {
        let next = terms[j].prox(&(&x + &ybar[j]), step)?;
        ybar[j] += &x - &next;
        x = next;
        out.push(x.clone());
    }
    Ok(out)
}

pub fn run_sdca(terms: &[ProxTerm], x0: &Vector, iterations: usize, seed: u64) -> Result<Vec<Vector>> {
    run_sdca_indexed(terms, x0, &index_stream(terms.len(), seed, iterations))
}

/// `xᵗ⁺¹ = Π_{Cⱼ}(xᵗ + ȳⱼᵗ)` with the same correction update.
pub fn run_dykstra_indexed(sets: &[ProxTerm], x0: &Vector, indices: &[usize]) -> Result<Vec<Vector>> {
    let m = sets.len();
    check_indices(indices, m)?;
    let mut corr = vec![Vector::zeros(x0.len()); m];
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(indices.len() + 1);
    out.push(x.clone());
    for &j in indices {
        let shifted = &x + &corr[j];
        let next = sets[j].prox(&shifted, 1.0)?;
        corr[j] = shifted - &next;
        x = next;
        out.push(x.clone());
    }
    Ok(out)
}

pub fn run_dykstra(sets: &[ProxTerm], x0: &Vector, iterations: usize, seed: u64) -> Result<Vec<Vector>> {
    run_dykstra_indexed(sets, x0, &index_stream(sets.len(), seed, iterations))
}

/// `xᵗ⁺¹ = Π_{aⱼᵀx = bⱼ}(xᵗ)` over the rows of `a`.
pub fn run_kaczmarz_indexed(a: &Matrix, b: &Vector, x0: &Vector, indices: &[usize]) -> Result<Vec<Vector>> {
    check_dim(a.nrows(), b.len())?;
    check_dim(a.ncols(), x0.len())?;
    check_indices(indices, a.nrows())?;
    let rows: Vec<Vector> = (0..a.nrows()).map(|j| a.row(j).transpose()).collect();
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(indices.len() + 1);
    out.push(x.clone());
    for &j in indices {
        x = project_hyperplane(&x, &rows[j], b[j])?;
        out.push(x.clone());
    }
    Ok(out)
}

pub fn run_kaczmarz(a: &Matrix, b: &Vector, x0: &Vector, iterations: usize, seed: u64) -> Result<Vec<Vector>> {
    run_kaczmarz_indexed(a, b, x0, &index_stream(a.nrows(), seed, iterations))
}

/// Point-SAGA with step `γ` and initial gradient table `y⁰`:
/// `zⱼ = x + γ(yⱼ − ȳ)`, `x⁺ = prox_{γgⱼ}(zⱼ)`, `yⱼ ← (zⱼ − x⁺)/γ`.
pub fn run_point_saga_indexed(
    terms: &[ProxTerm],
    x0: &Vector,
    y0: &[Vector],
    gamma: f64,
    indices: &[usize],
) -> Result<Vec<Vector>> {
    let m = terms.len();
    if y0.len() != m {
        return Err(Error::arg("need one initial table entry per term"));
    }
    if !(gamma > 0.0) {
        return Err(Error::arg("step must be positive"));
    }
    check_indices(indices, m)?;
    let mut table = y0.to_vec();
    let mut mean = Vector::zeros(x0.len());
    for y in &table {
        check_dim(x0.len(), y.len())?;
        mean += y;
    }
    mean /= m as f64;
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(indices.len() + 1);
    out.push(x.clone());
    for &j in indices {
        let zj = &x + (&table[j] - &mean) * gamma;
        let next = terms[j].prox(&zj, gamma)?;
        let g_new = (zj - &next) / gamma;
        mean += (&g_new - &table[j]) / m as f64;
        table[j] = g_new;
        x = next;
        out.push(x.clone());
    }
    Ok(out)
}

pub fn run_point_saga(
    terms: &[ProxTerm],
    x0: &Vector,
    y0: &[Vector],
    gamma: f64,
    iterations: usize,
    seed: u64,
) -> Result<Vec<Vector>> {
    run_point_saga_indexed(terms, x0, y0, gamma, &index_stream(terms.len(), seed, iterations))
}

/// `z = (1−α)x − αy`, `x⁺ = Π_{aⱼ}(z)`, `y⁺ = y + γ(z − x⁺) + (1−β)(z − y)`, from `x⁰ = y⁰ = 0`.
pub fn run_accelerated_kaczmarz_indexed(
    a: &Matrix,
    b: &Vector,
    params: (f64, f64, f64),
    indices: &[usize],
) -> Result<Vec<Vector>> {
    check_dim(a.nrows(), b.len())?;
    check_indices(indices, a.nrows())?;
    let (alpha, beta, gamma) = params;
    let rows: Vec<Vector> = (0..a.nrows()).map(|j| a.row(j).transpose()).collect();
    let d = a.ncols();
    let mut x = Vector::zeros(d);
    let mut y = Vector::zeros(d);
    let mut out = Vec::with_capacity(indices.len() + 1);
    out.push(x.clone());
    for &j in indices {
        let z = &x * (1.0 - alpha) - &y * alpha;
        let next = project_hyperplane(&z, &rows[j], b[j])?;
        y = &y + (&z - &next) * gamma + (&z - &y) * (1.0 - beta);
        x = next;
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn single_projection() {
        let g = vec![ProxTerm::hyperplane(v(&[1.0, 1.0]), 2.0).unwrap()];
        let xs = run_sdca_indexed(&g, &v(&[0.0, 0.0]), &[0]).unwrap();
        assert!((&xs[1] - v(&[1.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn orthogonal_kaczmarz_two_steps() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let b = v(&[3.0, -4.0]);
        let xs = run_kaczmarz_indexed(&a, &b, &v(&[0.0, 0.0]), &[1, 0]).unwrap();
        assert!((&xs[2] - v(&[3.0, -2.0])).amax() < 1e-15);
    }

    #[test]
    fn accelerated_parameters() {
        let a = Matrix::identity(2, 2);
        let cfg = accelerated_kaczmarz_config(&a, &v(&[1.0, 1.0]), 0.25, 2).unwrap();
        assert_eq!(cfg.params, Some((0.25, 1.0, 2.0)));
    }

    #[test]
    fn point_saga_single_term_is_proximal_point() {
        let g = vec![ProxTerm::l1(1, 1.0).unwrap()];
        let xs = run_point_saga_indexed(&g, &v(&[5.0]), &[v(&[0.0])], 0.5, &[0, 0, 0]).unwrap();
        let got: Vec<f64> = xs.iter().map(|x| x[0]).collect();
        assert_eq!(got, vec![5.0, 4.5, 4.0, 3.5]);
    }

    #[test]
    fn bad_index_rejected() {
        let g = vec![ProxTerm::zero(1)];
        assert!(run_sdca_indexed(&g, &v(&[0.0]), &[1]).is_err());
    }
}
