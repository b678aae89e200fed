//! Gradient oracles for the smooth term: full gradient, SGD, SVRG and SAGA.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::SmoothTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Full,
    Sgd,
    Svrg,
    Saga,
    /// `v ≡ 0`, only valid when `f ≡ 0`.
    Zero,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] =
        [EstimatorKind::Full, EstimatorKind::Sgd, EstimatorKind::Svrg, EstimatorKind::Saga, EstimatorKind::Zero];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Full => "full",
            EstimatorKind::Sgd => "sgd",
            EstimatorKind::Svrg => "svrg",
            EstimatorKind::Saga => "saga",
            EstimatorKind::Zero => "zero",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown estimator '{s}' (expected full, sgd, svrg, saga or zero)")))
    }
}

/// `(η₀, ω, ρ)`; `ρ = None` where the memory decay is not applicable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConstants {
    pub eta0: f64,
    pub omega: f64,
    pub rho: Option<f64>,
}

impl EstimatorConstants {
    /// Constants for smoothness `L`, strong convexity `μ` and `n` components.
    pub fn for_kind(kind: EstimatorKind, lipschitz: f64, mu: f64, n: usize) -> Self {
        let strongly = mu > 0.0;
        if lipschitz == 0.0 {
            return EstimatorConstants { eta0: f64::INFINITY, omega: 1.0, rho: Some(f64::INFINITY) };
        }
        match kind {
            EstimatorKind::Full if strongly => {
                EstimatorConstants { eta0: 2.0 / (lipschitz + mu), omega: 1.0, rho: Some(f64::INFINITY) }
            }
            EstimatorKind::Full => {
                let eta0 = 1.99 / lipschitz;
                EstimatorConstants { eta0, omega: 2.0 - eta0 * lipschitz, rho: Some(f64::INFINITY) }
            }
            EstimatorKind::Sgd => EstimatorConstants { eta0: 0.25 / lipschitz, omega: 1.0, rho: None },
            EstimatorKind::Svrg | EstimatorKind::Saga => {
                let rho = Some(1.0 / (3.0 * n as f64));
                if strongly {
                    EstimatorConstants { eta0: 0.2 / lipschitz, omega: 1.0, rho }
                } else {
                    EstimatorConstants { eta0: 1.0 / (6.0 * lipschitz), omega: 1.0 / 3.0, rho }
                }
            }
            EstimatorKind::Zero => EstimatorConstants { eta0: f64::INFINITY, omega: 1.0, rho: Some(f64::INFINITY) },
        }
    }

    /// SGD on a strongly convex `f` with `σ* = 0`.
    pub fn sgd_interpolation(lipschitz: f64) -> Self {
        EstimatorConstants { eta0: 0.5 / lipschitz, omega: 1.0, rho: Some(f64::INFINITY) }
    }

    pub fn for_smooth(kind: EstimatorKind, smooth: &SmoothTerm) -> Self {
        Self::for_kind(kind, smooth.lipschitz(), smooth.strong_convexity(), smooth.n())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdMemory {
    pub horizon: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrgMemory {
    pub reference: Vector,
    pub full_gradient: Vector,
    pub refresh_prob: f64,
}

impl SvrgMemory {
    pub fn new(smooth: &SmoothTerm, u: &Vector, minibatch: usize) -> Self {
        SvrgMemory {
            reference: u.clone(),
            full_gradient: smooth.gradient(u),
            refresh_prob: (minibatch as f64 / smooth.n() as f64).min(1.0),
        }
    }

    pub fn refresh(&mut self, smooth: &SmoothTerm, u: &Vector) {
        self.reference = u.clone();
        self.full_gradient = smooth.gradient(u);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SagaMemory {
    pub table: Vec<Vector>,
    pub mean: Vector,
}

impl SagaMemory {
    /// `αᵢ = ∇fᵢ(x⁰)`
    pub fn new(smooth: &SmoothTerm, x0: &Vector) -> Self {
        let table: Vec<Vector> = (0..smooth.n()).map(|i| smooth.component_gradient(i, x0)).collect();
        let mut mem = SagaMemory { mean: Vector::zeros(x0.len()), table };
        mem.recompute_mean();
        mem
    }

    pub fn from_table(table: Vec<Vector>) -> Result<Self> {
        let d = table.first().map(|v| v.len()).ok_or_else(|| Error::arg("empty SAGA table"))?;
        let mut mem = SagaMemory { mean: Vector::zeros(d), table };
        mem.recompute_mean();
        Ok(mem)
    }

    pub fn recompute_mean(&mut self) {
        let n = self.table.len() as f64;
        self.mean = self.table.iter().fold(Vector::zeros(self.mean.len()), |acc, a| acc + a) / n;
    }

    /// `‖maintained ᾱ − recomputed ᾱ‖`
    pub fn mean_drift(&self) -> f64 {
        let n = self.table.len() as f64;
        let exact = self.table.iter().fold(Vector::zeros(self.mean.len()), |acc, a| acc + a) / n;
        (exact - &self.mean).norm()
    }
}

/// `∇f(x)`
pub fn estimate_full(smooth: &SmoothTerm, x: &Vector) -> Vector {
    smooth.gradient(x)
}

fn sample_indices<R: Rng + ?Sized>(rng: &mut R, n: usize, tau: usize) -> Vec<usize> {
    (0..tau).map(|_| rng.random_range(0..n)).collect()
}

/// Minibatch mean of `∇fᵢ(x)` over the given indices.
pub fn sgd_with_indices(smooth: &SmoothTerm, x: &Vector, indices: &[usize]) -> Vector {
    let mut v = Vector::zeros(x.len());
    let w = 1.0 / indices.len() as f64;
    for &i in indices {
        smooth.components()[i].add_gradient(x, w, &mut v);
    }
    v
}

pub fn estimate_sgd<R: Rng + ?Sized>(smooth: &SmoothTerm, x: &Vector, rng: &mut R, tau: usize) -> Vector {
    let idx = sample_indices(rng, smooth.n(), tau);
    sgd_with_indices(smooth, x, &idx)
}

/// SVRG estimate for given indices; refreshes the reference point at `x` afterwards if `refresh`.
pub fn svrg_with_indices(
    memory: &mut SvrgMemory,
    smooth: &SmoothTerm,
    x: &Vector,
    indices: &[usize],
    refresh: bool,
) -> Vector {
    let mut v = memory.full_gradient.clone();
    let w = 1.0 / indices.len() as f64;
    for &i in indices {
        let c = &smooth.components()[i];
        c.add_gradient(x, w, &mut v);
        c.add_gradient(&memory.reference, -w, &mut v);
    }
    if refresh {
        memory.refresh(smooth, x);
    }
    v
}

pub fn estimate_svrg<R: Rng + ?Sized>(
    memory: &mut SvrgMemory,
    smooth: &SmoothTerm,
    x: &Vector,
    rng: &mut R,
    tau: usize,
) -> (Vector, bool) {
    let idx = sample_indices(rng, smooth.n(), tau);
    let refresh = rng.random::<f64>() < memory.refresh_prob;
    (svrg_with_indices(memory, smooth, x, &idx, refresh), refresh)
}

/// SAGA estimate for given indices; stores `∇fᵢ(x)` in the table afterwards.
pub fn saga_with_indices(memory: &mut SagaMemory, smooth: &SmoothTerm, x: &Vector, indices: &[usize]) -> Vector {
    let w = 1.0 / indices.len() as f64;
    let grads: Vec<Vector> = indices.iter().map(|&i| smooth.component_gradient(i, x)).collect();
    let mut v = memory.mean.clone();
    for (&i, g) in indices.iter().zip(&grads) {
        v += (g - &memory.table[i]) * w;
    }
    let n = memory.table.len() as f64;
    for (&i, g) in indices.iter().zip(grads) {
        let delta = &g - &memory.table[i];
        memory.mean.axpy(1.0 / n, &delta, 1.0);
        memory.table[i] = g;
    }
    v
}

pub fn estimate_saga<R: Rng + ?Sized>(
    memory: &mut SagaMemory,
    smooth: &SmoothTerm,
    x: &Vector,
    rng: &mut R,
    tau: usize,
) -> Vector {
    let idx = sample_indices(rng, smooth.n(), tau);
    saga_with_indices(memory, smooth, x, &idx)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorState {
    Full,
    Zero,
    Sgd(SgdMemory),
    Svrg(SvrgMemory),
    Saga(SagaMemory),
}

/// A gradient oracle together with its memory and evaluation counter.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    kind: EstimatorKind,
    minibatch: usize,
    state: EstimatorState,
    evals: u64,
    n: usize,
}

impl Estimator {
    /// `horizon` is the SGD iteration budget `t₀`.
    pub fn new(kind: EstimatorKind, smooth: &SmoothTerm, x0: &Vector, minibatch: usize, horizon: u64) -> Result<Self> {
        if minibatch == 0 {
            return Err(Error::config("minibatch must be at least 1"));
        }
        let n = smooth.n();
        let (state, evals) = match kind {
            EstimatorKind::Full => (EstimatorState::Full, 0),
            EstimatorKind::Zero => {
                if !smooth.is_zero() {
                    return Err(Error::config("zero estimator requires f ≡ 0"));
                }
                (EstimatorState::Zero, 0)
            }
            EstimatorKind::Sgd => (EstimatorState::Sgd(SgdMemory { horizon: horizon.max(1) }), 0),
            EstimatorKind::Svrg | EstimatorKind::Saga if smooth.expectation_mode() => {
                return Err(Error::config(format!("{kind} needs a finite sum, not an expectation")));
            }
            EstimatorKind::Svrg => (EstimatorState::Svrg(SvrgMemory::new(smooth, x0, minibatch)), n as u64),
            EstimatorKind::Saga => (EstimatorState::Saga(SagaMemory::new(smooth, x0)), n as u64),
        };
        Ok(Estimator { kind, minibatch, state, evals, n })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn minibatch(&self) -> usize {
        self.minibatch
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut EstimatorState {
        &mut self.state
    }

    /// Component-gradient evaluations so far.
    pub fn component_evals(&self) -> u64 {
        self.evals
    }

    /// Component-gradient evaluations divided by `n`.
    pub fn epochs(&self) -> f64 {
        self.evals as f64 / self.n as f64
    }

    pub fn estimate<R: Rng + ?Sized>(&mut self, smooth: &SmoothTerm, x: &Vector, rng: &mut R) -> Vector {
        let tau = self.minibatch;
        match &mut self.state {
            EstimatorState::Full => {
                self.evals += self.n as u64;
                estimate_full(smooth, x)
            }
            EstimatorState::Zero => Vector::zeros(x.len()),
            EstimatorState::Sgd(_) => {
                self.evals += tau as u64;
                estimate_sgd(smooth, x, rng, tau)
            }
            EstimatorState::Svrg(mem) => {
                let (v, refreshed) = estimate_svrg(mem, smooth, x, rng, tau);
                self.evals += 2 * tau as u64 + if refreshed { self.n as u64 } else { 0 };
                v
            }
            EstimatorState::Saga(mem) => {
                self.evals += tau as u64;
                estimate_saga(mem, smooth, x, rng, tau)
            }
        }
    }

    /// Deterministic estimate with explicit sample indices and SVRG refresh decision.
    pub fn estimate_with(&mut self, smooth: &SmoothTerm, x: &Vector, indices: &[usize], refresh: bool) -> Vector {
        match &mut self.state {
            EstimatorState::Full => estimate_full(smooth, x),
            EstimatorState::Zero => Vector::zeros(x.len()),
            EstimatorState::Sgd(_) => sgd_with_indices(smooth, x, indices),
            EstimatorState::Svrg(mem) => svrg_with_indices(mem, smooth, x, indices, refresh),
            EstimatorState::Saga(mem) => saga_with_indices(mem, smooth, x, indices),
        }
    }

    /// The memory term `Mᵗ` relative to `x*`.
    pub fn m_diagnostic(&self, smooth: &SmoothTerm, x_star: &Vector, eta: f64, t: u64) -> f64 {
        let tau = self.minibatch as f64;
        match &self.state {
            EstimatorState::Full | EstimatorState::Zero => 0.0,
            EstimatorState::Sgd(mem) => {
                let remaining = mem.horizon.saturating_sub(t) as f64;
                2.0 * eta * eta * remaining * sgd_sigma_star_sq(smooth, x_star, self.minibatch)
            }
            EstimatorState::Svrg(mem) => {
                let s: f64 = (0..smooth.n())
                    .map(|i| {
                        (smooth.component_gradient(i, &mem.reference) - smooth.component_gradient(i, x_star))
                            .norm_squared()
                    })
                    .sum();
                3.0 * eta * eta / tau * s
            }
            EstimatorState::Saga(mem) => {
                let s: f64 = mem
                    .table
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (a - smooth.component_gradient(i, x_star)).norm_squared())
                    .sum();
                3.0 * eta * eta / tau * s
            }
        }
    }
}

/// Variance of the minibatch SGD estimate at `x*`, by enumeration.
pub fn sgd_sigma_star_sq(smooth: &SmoothTerm, x_star: &Vector, minibatch: usize) -> f64 {
    let g = smooth.gradient(x_star);
    let n = smooth.n() as f64;
    let s: f64 = (0..smooth.n()).map(|i| (smooth.component_gradient(i, x_star) - &g).norm_squared()).sum();
    s / n / minibatch as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Row};
    use crate::problem::SmoothComponent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad_term() -> SmoothTerm {
        let comps = vec![
            SmoothComponent::Quadratic { hessian: Matrix::identity(2, 2) * 2.0, center: Vector::from_vec(vec![1.0, 0.0]) },
            SmoothComponent::LeastSquares {
                row: Row::Dense(Vector::from_vec(vec![1.0, -1.0])),
                target: 0.5,
                ridge: 0.0,
            },
            SmoothComponent::Quadratic { hessian: Matrix::identity(2, 2), center: Vector::from_vec(vec![0.0, 3.0]) },
        ];
        SmoothTerm::quadratic(2, comps).unwrap()
    }

    #[test]
    fn constants_match_lemmas() {
        let c = EstimatorConstants::for_kind(EstimatorKind::Full, 1.0, 0.1, 1);
        assert_eq!(c.eta0, 2.0 / 1.1);
        assert_eq!(c.omega, 1.0);
        let c = EstimatorConstants::for_kind(EstimatorKind::Full, 2.0, 0.0, 1);
        assert!((c.omega - (2.0 - 1.99)).abs() < 1e-15);
        let c = EstimatorConstants::for_kind(EstimatorKind::Saga, 2.0, 0.0, 10);
        assert_eq!((c.eta0, c.omega, c.rho), (1.0 / 12.0, 1.0 / 3.0, Some(1.0 / 30.0)));
        let c = EstimatorConstants::for_kind(EstimatorKind::Svrg, 2.0, 0.5, 10);
        assert_eq!((c.eta0, c.omega), (0.1, 1.0));
        let c = EstimatorConstants::for_kind(EstimatorKind::Sgd, 2.0, 0.5, 10);
        assert_eq!((c.eta0, c.rho), (0.125, None));
        assert_eq!(EstimatorConstants::sgd_interpolation(2.0).eta0, 0.25);
    }

    #[test]
    fn saga_bookkeeping() {
        let f = quad_term();
        let x0 = Vector::from_vec(vec![0.3, 0.2]);
        let mut est = Estimator::new(EstimatorKind::Saga, &f, &x0, 1, 0).unwrap();
        let v = est.estimate_with(&f, &x0, &[1], false);
        assert!((v - f.gradient(&x0)).amax() < 1e-15);
        let x = Vector::from_vec(vec![-1.0, 2.0]);
        est.estimate_with(&f, &x, &[2], false);
        match est.state() {
            EstimatorState::Saga(m) => {
                assert_eq!(m.table[2], f.component_gradient(2, &x));
                assert!(m.mean_drift() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn svrg_at_reference_is_exact() {
        let f = quad_term();
        let x = Vector::from_vec(vec![0.7, -0.4]);
        let mut mem = SvrgMemory::new(&f, &x, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (v, _) = estimate_svrg(&mut mem, &f, &x, &mut rng, 2);
        assert!((v - f.gradient(&x)).amax() < 1e-14);
    }

    #[test]
    fn zero_estimator_needs_zero_f() {
        let f = quad_term();
        assert!(Estimator::new(EstimatorKind::Zero, &f, &Vector::zeros(2), 1, 0).is_err());
        assert!(Estimator::new(EstimatorKind::Saga, &f, &Vector::zeros(2), 0, 0).is_err());
        let e = f.clone().with_expectation_mode(true);
        assert!(Estimator::new(EstimatorKind::Svrg, &e, &Vector::zeros(2), 1, 0).is_err());
        assert!(Estimator::new(EstimatorKind::Sgd, &e, &Vector::zeros(2), 1, 0).is_ok());
    }

    #[test]
    fn epoch_accounting() {
        let f = quad_term();
        let x = Vector::zeros(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut full = Estimator::new(EstimatorKind::Full, &f, &x, 1, 0).unwrap();
        full.estimate(&f, &x, &mut rng);
        assert_eq!(full.component_evals(), 3);
        let mut saga = Estimator::new(EstimatorKind::Saga, &f, &x, 2, 0).unwrap();
        saga.estimate(&f, &x, &mut rng);
        assert_eq!(saga.component_evals(), 5);
        let mut sgd = Estimator::new(EstimatorKind::Sgd, &f, &x, 2, 10).unwrap();
        sgd.estimate(&f, &x, &mut rng);
        assert_eq!(sgd.component_evals(), 2);
    }

    #[test]
    fn m_vanishes_at_optimum() {
        let f = quad_term();
        let (h, c) = f.as_quadratic().unwrap();
        let x_star = h.lu().solve(&c).unwrap();
        let saga = Estimator::new(EstimatorKind::Saga, &f, &x_star, 1, 0).unwrap();
        assert!(saga.m_diagnostic(&f, &x_star, 0.1, 0) < 1e-25);
        let sgd = Estimator::new(EstimatorKind::Sgd, &f, &x_star, 1, 50).unwrap();
        assert_eq!(sgd.m_diagnostic(&f, &x_star, 0.1, 50), 0.0);
        assert!(sgd.m_diagnostic(&f, &x_star, 0.1, 0) > 0.0);
        let full = Estimator::new(EstimatorKind::Full, &f, &x_star, 1, 0).unwrap();
        assert_eq!(full.m_diagnostic(&f, &x_star, 0.1, 0), 0.0);
    }
}
