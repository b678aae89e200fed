//! The decoupling iteration, its variants, stepsize defaults and the solve driver.

mod diagnostics;
mod reference;

use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{check_dim, Error, Result};
use crate::estimators::{Estimator, EstimatorConstants, EstimatorKind};
use crate::linalg::{Matrix, Vector};
use crate::problem::{eval_objective, Problem};
use crate::prox::AffineSet;
use crate::state::{ProjectionMode, Sampling, Schedule, SolverState, StepConfig};
use crate::trace::TraceRecord;

pub use diagnostics::{
    fixed_point_residuals, gamma, key_lemma_check, linear_rate, lyapunov, LyapunovBreakdown,
};
pub use reference::{reference_solution, reference_solution_with, Reference, ReferenceOptions};

const J_STREAM: u64 = 1;
const F_STREAM: u64 = 2;

/// Independent ChaCha stream derived from a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sampler for the index `j`, seeded from the solver's master seed.
#[derive(Debug, Clone)]
pub struct JSampler {
    m: usize,
    weighted: Option<WeightedIndex<f64>>,
    rng: ChaCha20Rng,
}

impl JSampler {
    /// `uniform` draws `j` uniformly and ignores `probs` beyond its length.
    pub fn new(probs: &[f64], uniform: bool, seed: u64) -> Result<Self> {
        let weighted = if uniform || probs.is_empty() {
            None
        } else {
            Some(WeightedIndex::new(probs).map_err(|e| Error::config(format!("bad probabilities: {e}")))?)
        };
        Ok(JSampler { m: probs.len(), weighted, rng: stream_rng(seed, J_STREAM) })
    }

    pub fn uniform(m: usize, seed: u64) -> Self {
        JSampler { m, weighted: None, rng: stream_rng(seed, J_STREAM) }
    }

    /// `None` when `m = 0`.
    pub fn sample(&mut self) -> Option<usize> {
        if self.m == 0 {
            return None;
        }
        Some(match &self.weighted {
            Some(w) => w.sample(&mut self.rng),
            None => self.rng.random_range(0..self.m),
        })
    }

    /// The first `len` indices a uniform solver run with this seed would draw.
    pub fn uniform_sequence(m: usize, seed: u64, len: usize) -> Vec<usize> {
        let mut s = JSampler::uniform(m, seed);
        (0..len).filter_map(|_| s.sample()).collect()
    }
}

/// Normalized sampling probabilities for the given mode.
pub fn default_probabilities(problem: &Problem, sampling: &Sampling) -> Result<Vec<f64>> {
    let m = problem.m();
    if m == 0 {
        return Ok(Vec::new());
    }
    let weights: Vec<f64> = match sampling {
        Sampling::Uniform => vec![1.0; m],
        Sampling::ByMatrixNorm => problem
            .prox_terms()
            .iter()
            .enumerate()
            .map(|(j, g)| {
                g.matrix_norm().ok_or_else(|| Error::config(format!("term {j} has no linear structure")))
            })
            .collect::<Result<_>>()?,
        Sampling::BySmoothness => problem
            .prox_terms()
            .iter()
            .enumerate()
            .map(|(j, g)| {
                let l = g.smoothness();
                if l.is_finite() && l > 0.0 {
                    Ok(l)
                } else {
                    Err(Error::config(format!("term {j} has no finite positive smoothness constant")))
                }
            })
            .collect::<Result<_>>()?,
        Sampling::Explicit(p) => {
            if p.len() != m {
                return Err(Error::config(format!("expected {m} probabilities, got {}", p.len())));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!("probabilities sum to {s}, not 1")));
            }
            p.clone()
        }
    };
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::config("probabilities must be positive"));
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// `η₀`, `η_best = 1/√(ωμmL_g)` and the chosen `η = min{η₀, η_best}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeDefaults {
    pub eta0: f64,
    pub eta_best: Option<f64>,
    pub eta: f64,
}

impl StepsizeDefaults {
    pub fn compute(problem: &Problem, constants: &EstimatorConstants) -> Self {
        let mu = problem.smooth().strong_convexity();
        let m = problem.m();
        let lg = problem.prox_terms().iter().map(|g| g.smoothness()).fold(0.0_f64, f64::max);
        let eta_best = (mu > 0.0 && m > 0 && lg.is_finite() && lg > 0.0)
            .then(|| 1.0 / (constants.omega * mu * m as f64 * lg).sqrt());
        let eta = eta_best.map_or(constants.eta0, |b| b.min(constants.eta0));
        StepsizeDefaults { eta0: constants.eta0, eta_best, eta }
    }
}

/// A schedule with all parameters fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedSchedule {
    Constant(f64),
    DecreasingA { a: f64, mu: f64, omega: f64 },
    SgdDecreasing { a: f64, mu: f64 },
}

impl ResolvedSchedule {
    pub fn decreasing_a(a: f64, mu: f64, omega: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::arg("decreasing schedule requires μ > 0"));
        }
        if !(a > 0.0 && omega > 0.0) {
            return Err(Error::arg("decreasing schedule requires a > 0 and ω > 0"));
        }
        Ok(ResolvedSchedule::DecreasingA { a, mu, omega })
    }

    /// Stepsize used at iteration `t`.
    pub fn eta(&self, t: u64) -> f64 {
        let t = t as f64;
        match *self {
            ResolvedSchedule::Constant(eta) => eta,
            ResolvedSchedule::DecreasingA { a, mu, omega } => 2.0 / (mu * omega * (a + t)),
            ResolvedSchedule::SgdDecreasing { a, mu } => 2.0 / (a + mu * (t + 1.0)),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ResolvedSchedule::Constant(_))
    }

    /// Fill defaults and validate a [`Schedule`].
    pub fn resolve(
        schedule: &Schedule,
        problem: &Problem,
        constants: &EstimatorConstants,
        allow_large_step: bool,
    ) -> Result<Self> {
        let mu = problem.smooth().strong_convexity();
        match schedule {
            Schedule::Constant { eta } => {
                let eta = match eta {
                    Some(e) => *e,
                    None => StepsizeDefaults::compute(problem, constants).eta,
                };
                if !eta.is_finite() {
                    return Err(Error::config("no finite default stepsize; set the stepsize explicitly"));
                }
                if !(eta > 0.0) {
                    return Err(Error::arg(format!("stepsize must be positive, got {eta}")));
                }
                if eta > constants.eta0 * (1.0 + 1e-12) {
                    if allow_large_step {
                        log::warn!("stepsize {eta} exceeds η₀ = {}", constants.eta0);
                    } else {
                        return Err(Error::config(format!(
                            "stepsize {eta} exceeds η₀ = {} (set allow_large_step to override)",
                            constants.eta0
                        )));
                    }
                }
                Ok(ResolvedSchedule::Constant(eta))
            }
            Schedule::DecreasingA { a } => {
                if !(mu > 0.0) {
                    return Err(Error::arg("decreasing schedule requires μ > 0"));
                }
                let a = match a {
                    Some(a) => *a,
                    None => {
                        let inv_rho = constants.rho.map_or(0.0, |r| 1.0 / r);
                        2.0 * (1.0 / (constants.omega * mu * constants.eta0)).max(inv_rho)
                    }
                };
                ResolvedSchedule::decreasing_a(a, mu, constants.omega)
            }
            Schedule::SgdDecreasing { a } => {
                let a = a.unwrap_or(4.0 * problem.smooth().lipschitz());
                if !(a > 0.0) {
                    return Err(Error::arg("sgd schedule requires a > 0"));
                }
                Ok(ResolvedSchedule::SgdDecreasing { a, mu })
            }
        }
    }
}

/// What one step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub j: Option<usize>,
    pub z: Vector,
    /// `‖xᵗ⁺¹ − xᵗ‖ + ‖zᵗ − xᵗ⁺¹‖`
    pub residual: f64,
}

fn check_probs(problem: &Problem, probs: &[f64]) -> Result<()> {
    if probs.len() != problem.m() {
        return Err(Error::arg(format!("expected {} probabilities, got {}", problem.m(), probs.len())));
    }
    Ok(())
}

fn term_step(eta: f64, m: usize, p: f64) -> Result<f64> {
    let eta_j = eta / (m as f64 * p);
    if eta_j > 0.0 && eta_j.is_finite() {
        Ok(eta_j)
    } else {
        Err(Error::arg(format!("per-term stepsize must be positive, got {eta_j}")))
    }
}

fn r_step(problem: &Problem, state: &SolverState, v: &Vector, eta: f64, eta_r: f64) -> Result<Vector> {
    check_dim(state.dim(), v.len())?;
    let mut arg = state.x.clone();
    arg.axpy(-eta, v, 1.0);
    if problem.m() > 0 {
        arg.axpy(-eta, &state.y_bar, 1.0);
    }
    if problem.regularizer().is_zero() {
        Ok(arg)
    } else {
        problem.regularizer().prox(&arg, eta_r)
    }
}

fn decoupled_step(
    state: &mut SolverState,
    problem: &Problem,
    eta: f64,
    eta_r: f64,
    probs: &[f64],
    v: &Vector,
    j: usize,
) -> Result<StepOutcome> {
    check_probs(problem, probs)?;
    let m = problem.m();
    if !(eta > 0.0) {
        return Err(Error::arg(format!("stepsize must be positive, got {eta}")));
    }
    let z = r_step(problem, state, v, eta, eta_r)?;
    if m == 0 {
        let residual = (&z - &state.x).norm();
        state.x = z.clone();
        state.t += 1;
        return Ok(StepOutcome { j: None, z, residual });
    }
    if j >= m {
        return Err(Error::arg(format!("term index {j} out of range for m = {m}")));
    }
    if state.y.len() != m {
        return Err(Error::arg("state has no dual table"));
    }
    let eta_j = term_step(eta, m, probs[j])?;
    let mut u = z.clone();
    u.axpy(eta_j, &state.y[j], 1.0);
    let x_new = problem.prox_terms()[j].prox(&u, eta_j)?;
    let y_new = &state.y[j] + (&z - &x_new) / eta_j;
    state.y_bar.axpy(1.0 / m as f64, &(&y_new - &state.y[j]), 1.0);
    state.y[j] = y_new;
    let residual = (&x_new - &state.x).norm() + (&z - &x_new).norm();
    state.x = x_new;
    state.t += 1;
    Ok(StepOutcome { j: Some(j), z, residual })
}

/// One iteration with constant stepsize `η` and sampled term `j`.
pub fn step(
    state: &mut SolverState,
    problem: &Problem,
    eta: f64,
    probs: &[f64],
    v: &Vector,
    j: usize,
) -> Result<StepOutcome> {
    decoupled_step(state, problem, eta, eta, probs, v, j)
}

/// One iteration with `ηᵗ` in the x/y updates and `ηᵗ⁺¹` scaling the R-prox.
pub fn step_timevarying(
    state: &mut SolverState,
    problem: &Problem,
    schedule: &ResolvedSchedule,
    probs: &[f64],
    v: &Vector,
    j: usize,
) -> Result<StepOutcome> {
    let eta = schedule.eta(state.t);
    let eta_r = schedule.eta(state.t + 1);
    decoupled_step(state, problem, eta, eta_r, probs, v, j)
}

/// The affine sets `{x : Aⱼᵀx = bⱼ}` of a problem whose terms are all affine constraints.
pub fn affine_constraints(problem: &Problem) -> Result<Vec<AffineSet>> {
    problem
        .prox_terms()
        .iter()
        .enumerate()
        .map(|(j, g)| g.affine_constraint().ok_or_else(|| Error::arg(format!("term {j} is not an affine constraint"))))
        .collect()
}

/// Memory-efficient iteration for affine constraints: reads and writes `x`, `ȳ` and `t` only.
pub fn step_linear_constraints(
    state: &mut SolverState,
    problem: &Problem,
    constraints: &[AffineSet],
    eta: f64,
    probs: &[f64],
    v: &Vector,
    j: usize,
) -> Result<StepOutcome> {
    linear_step(state, problem, constraints, eta, eta, probs, v, j)
}

#[allow(clippy::too_many_arguments)]
fn linear_step(
    state: &mut SolverState,
    problem: &Problem,
    constraints: &[AffineSet],
    eta: f64,
    eta_r: f64,
    probs: &[f64],
    v: &Vector,
    j: usize,
) -> Result<StepOutcome> {
    check_probs(problem, probs)?;
    let m = problem.m();
    if constraints.len() != m {
        return Err(Error::arg("constraint list does not match the problem"));
    }
    if !(eta > 0.0) {
        return Err(Error::arg(format!("stepsize must be positive, got {eta}")));
    }
    let z = r_step(problem, state, v, eta, eta_r)?;
    if m == 0 {
        let residual = (&z - &state.x).norm();
        state.x = z.clone();
        state.t += 1;
        return Ok(StepOutcome { j: None, z, residual });
    }
    if j >= m {
        return Err(Error::arg(format!("term index {j} out of range for m = {m}")));
    }
    let x_new = constraints[j].project(&z)?;
    state.y_bar.axpy(probs[j] / eta, &(&z - &x_new), 1.0);
    let residual = (&x_new - &state.x).norm() + (&z - &x_new).norm();
    state.x = x_new;
    state.t += 1;
    Ok(StepOutcome { j: Some(j), z, residual })
}

/// Projected (stochastic) gradient step onto the intersection of all constraints.
pub fn step_full_projection(state: &mut SolverState, set: &AffineSet, eta: f64, v: &Vector) -> Result<StepOutcome> {
    check_dim(state.dim(), v.len())?;
    let mut z = state.x.clone();
    z.axpy(-eta, v, 1.0);
    let x_new = set.project(&z)?;
    let residual = (&x_new - &state.x).norm() + (&z - &x_new).norm();
    state.x = x_new;
    state.t += 1;
    Ok(StepOutcome { j: None, z, residual })
}

/// Intersection of all affine constraints of a problem as one stacked set.
pub fn stacked_constraints(problem: &Problem) -> Result<AffineSet> {
    let sets = affine_constraints(problem)?;
    if sets.is_empty() {
        return AffineSet::new(Matrix::zeros(problem.dim(), 0), Vector::zeros(0));
    }
    let cols: usize = sets.iter().map(|s| s.matrix().ncols()).sum();
    let mut a = Matrix::zeros(problem.dim(), cols);
    let mut b = Vector::zeros(cols);
    let mut k = 0;
    for s in &sets {
        let c = s.matrix().ncols();
        a.columns_mut(k, c).copy_from(s.matrix());
        b.rows_mut(k, c).copy_from(s.offset());
        k += c;
    }
    AffineSet::new(a, b)
}

enum ModeData {
    Decoupled,
    Linear(Vec<AffineSet>),
    Full(AffineSet),
}

/// A configured run of the method on one problem.
pub struct Solver<'p> {
    problem: &'p Problem,
    config: StepConfig,
    constants: EstimatorConstants,
    schedule: ResolvedSchedule,
    probs: Vec<f64>,
    estimator: Estimator,
    state: SolverState,
    sampler: JSampler,
    f_rng: ChaCha20Rng,
    mode: ModeData,
    prox_evals: u64,
    last_residual: f64,
    started: Option<Instant>,
}

impl<'p> Solver<'p> {
    pub fn new(problem: &'p Problem, config: StepConfig, kind: EstimatorKind) -> Result<Self> {
        let x0 = match &config.x0 {
            Some(x) => {
                check_dim(problem.dim(), x.len())?;
                x.clone()
            }
            None => Vector::zeros(problem.dim()),
        };
        let m = problem.m();
        let mode = match config.mode {
            ProjectionMode::Decoupled => ModeData::Decoupled,
            ProjectionMode::LinearConstraints => ModeData::Linear(affine_constraints(problem)?),
            ProjectionMode::FullProjection => {
                if !problem.regularizer().is_zero() {
                    return Err(Error::config("full projection baseline requires R ≡ 0"));
                }
                ModeData::Full(stacked_constraints(problem).map_err(|e| Error::config(e.to_string()))?)
            }
        };
        let state = match mode {
            ModeData::Decoupled => SolverState::new(x0, m),
            _ => SolverState::new(x0, 0),
        };
        Self::build(problem, config, kind, state, mode)
    }

    /// Start from a given state (e.g. `(x*, y*)`); always uses the full dual table.
    pub fn with_state(
        problem: &'p Problem,
        config: StepConfig,
        kind: EstimatorKind,
        state: SolverState,
    ) -> Result<Self> {
        check_dim(problem.dim(), state.dim())?;
        if state.m() != problem.m() {
            return Err(Error::arg(format!("state has {} duals, problem has m = {}", state.m(), problem.m())));
        }
        if config.mode != ProjectionMode::Decoupled {
            return Err(Error::config("with_state supports the decoupled mode only"));
        }
        Self::build(problem, config, kind, state, ModeData::Decoupled)
    }

    fn build(
        problem: &'p Problem,
        config: StepConfig,
        kind: EstimatorKind,
        state: SolverState,
        mode: ModeData,
    ) -> Result<Self> {
        if config.trace_stride == 0 {
            return Err(Error::config("trace stride must be at least 1"));
        }
        if config.dual_refresh == 0 {
            return Err(Error::config("dual refresh period must be at least 1"));
        }
        let smooth = problem.smooth();
        let constants = EstimatorConstants::for_smooth(kind, smooth);
        let schedule = ResolvedSchedule::resolve(&config.schedule, problem, &constants, config.allow_large_step)?;
        let probs = default_probabilities(problem, &config.sampling)?;
        let uniform = matches!(config.sampling, Sampling::Uniform);
        let sampler = JSampler::new(&probs, uniform, config.seed)?;
        let estimator = Estimator::new(kind, smooth, &state.x, config.minibatch, config.max_iters)?;
        Ok(Solver {
            problem,
            f_rng: stream_rng(config.seed, F_STREAM),
            config,
            constants,
            schedule,
            probs,
            estimator,
            state,
            sampler,
            mode,
            prox_evals: 0,
            last_residual: 0.0,
            started: None,
        })
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn constants(&self) -> &EstimatorConstants {
        &self.constants
    }

    pub fn schedule(&self) -> &ResolvedSchedule {
        &self.schedule
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn config(&self) -> &StepConfig {
        &self.config
    }

    /// Stepsize for the current iteration.
    pub fn eta(&self) -> f64 {
        self.schedule.eta(self.state.t)
    }

    pub fn prox_evals(&self) -> u64 {
        self.prox_evals
    }

    pub fn epochs(&self) -> f64 {
        self.estimator.epochs()
    }

    pub fn has_dual_table(&self) -> bool {
        matches!(self.mode, ModeData::Decoupled)
    }

    /// Draw `vᵗ` from the estimator (advances the f-sampling stream).
    pub fn estimate(&mut self) -> Vector {
        self.estimator.estimate(self.problem.smooth(), &self.state.x, &mut self.f_rng)
    }

    /// Draw `j` (advances the j-sampling stream); `None` when `m = 0`.
    pub fn sample_j(&mut self) -> Option<usize> {
        self.sampler.sample()
    }

    /// Apply one iteration with a given estimate and index.
    pub fn apply(&mut self, v: &Vector, j: Option<usize>) -> Result<StepOutcome> {
        let eta = self.schedule.eta(self.state.t);
        let eta_r = self.schedule.eta(self.state.t + 1);
        let m = self.problem.m();
        let j_idx = match (j, m) {
            (_, 0) => 0,
            (Some(j), _) => j,
            (None, _) => return Err(Error::arg("missing term index")),
        };
        let out = match &self.mode {
            ModeData::Decoupled => {
                let out = decoupled_step(&mut self.state, self.problem, eta, eta_r, &self.probs, v, j_idx)?;
                if m > 0 && self.state.t.is_multiple_of(self.config.dual_refresh) {
                    self.state.refresh_dual();
                }
                self.prox_evals += 1;
                out
            }
            ModeData::Linear(sets) => {
                let out = linear_step(&mut self.state, self.problem, sets, eta, eta_r, &self.probs, v, j_idx)?;
                self.prox_evals += 1;
                out
            }
            ModeData::Full(set) => {
                let out = step_full_projection(&mut self.state, set, eta, v)?;
                self.prox_evals += m as u64;
                out
            }
        };
        self.last_residual = out.residual;
        Ok(out)
    }

    pub fn step_once(&mut self) -> Result<StepOutcome> {
        let v = self.estimate();
        let j = self.sample_j();
        self.apply(&v, j)
    }

    /// Snapshot diagnostics at the current iterate.
    pub fn record(&self, reference: Option<&Reference>) -> Result<TraceRecord> {
        let smooth = self.problem.smooth();
        let x = &self.state.x;
        let objective = eval_objective(self.problem, x)?;
        let eta = self.eta();
        let (gap, dist, lm, ly, lt) = match reference {
            Some(r) => {
                let dist = (x - &r.x).norm_squared();
                let mval = self.estimator.m_diagnostic(smooth, &r.x, eta, self.state.t);
                let yval = if self.has_dual_table() {
                    Some(lyapunov(&self.state, self.problem, r, eta, &self.probs, mval)?.y)
                } else {
                    None
                };
                (Some(objective - r.objective), Some(dist), Some(mval), yval, yval.map(|y| dist + mval + y))
            }
            None => (None, None, None, None, None),
        };
        let wall_ms = match (self.config.record_wall_time, self.started) {
            (true, Some(s)) => s.elapsed().as_secs_f64() * 1e3,
            _ => 0.0,
        };
        Ok(TraceRecord {
            t: self.state.t,
            epochs: self.epochs(),
            prox_evals: self.prox_evals,
            residual: self.last_residual,
            objective,
            objective_gap: gap,
            dist_sq: dist,
            lyap_m: lm,
            lyap_y: ly,
            lyap_total: lt,
            wall_ms,
        })
    }

    /// Run to `max_iters` or until the step residual drops below `tol`.
    pub fn run(&mut self, reference: Option<&Reference>) -> Result<Vec<TraceRecord>> {
        self.started = Some(Instant::now());
        let mut trace = vec![self.record(reference)?];
        let stride = self.config.trace_stride;
        for k in 1..=self.config.max_iters {
            let out = self.step_once()?;
            let done = self.config.tol > 0.0 && out.residual <= self.config.tol;
            if k % stride == 0 || k == self.config.max_iters || done {
                trace.push(self.record(reference)?);
            }
            if done {
                break;
            }
        }
        Ok(trace)
    }

    pub fn into_state(self) -> SolverState {
        self.state
    }
}

/// Run the method without reference diagnostics.
pub fn solve(problem: &Problem, config: &StepConfig, kind: EstimatorKind) -> Result<Vec<TraceRecord>> {
    solve_with_reference(problem, config, kind, None)
}

pub fn solve_with_reference(
    problem: &Problem,
    config: &StepConfig,
    kind: EstimatorKind,
    reference: Option<&Reference>,
) -> Result<Vec<TraceRecord>> {
    Solver::new(problem, config.clone(), kind)?.run(reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ProxTerm, SmoothTerm};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn plain_gradient_step() {
        let p = Problem::new(SmoothTerm::half_squared_distance(v(&[0.0, 0.0])), vec![], ProxTerm::zero(2)).unwrap();
        let mut s = SolverState::new(v(&[1.0, 1.0]), 0);
        let g = p.smooth().gradient(&s.x);
        step(&mut s, &p, 0.1, &[], &g, 0).unwrap();
        assert!((s.x.clone() - v(&[0.9, 0.9])).amax() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn sdca_first_step_projects() {
        let x0 = v(&[3.0, -1.0]);
        let g = vec![ProxTerm::hyperplane(v(&[1.0, 1.0]), 1.0).unwrap(), ProxTerm::hyperplane(v(&[1.0, -1.0]), 0.0).unwrap()];
        let p = Problem::new(SmoothTerm::half_squared_distance(x0.clone()), g.clone(), ProxTerm::zero(2)).unwrap();
        let mut s = SolverState::new(x0.clone(), 2);
        let grad = p.smooth().gradient(&s.x);
        let out = step(&mut s, &p, 0.5, &[0.5, 0.5], &grad, 1).unwrap();
        assert!((out.z - &x0).amax() < 1e-15);
        assert!((s.x.clone() - g[1].prox(&x0, 0.5).unwrap()).amax() < 1e-15);
    }

    #[test]
    fn bad_index_and_stepsize() {
        let g = vec![ProxTerm::hyperplane(v(&[1.0, 0.0]), 0.0).unwrap()];
        let p = Problem::new(SmoothTerm::zero(2), g, ProxTerm::zero(2)).unwrap();
        let mut s = SolverState::new(v(&[1.0, 1.0]), 1);
        let z = Vector::zeros(2);
        assert!(step(&mut s, &p, 1.0, &[1.0], &z, 1).is_err());
        assert!(step(&mut s, &p, 0.0, &[1.0], &z, 0).is_err());
        assert!(step(&mut s, &p, 1.0, &[0.0], &z, 0).is_err());
    }

    #[test]
    fn probabilities_modes() {
        let g = vec![
            ProxTerm::hyperplane(v(&[1.0, 0.0]), 0.0).unwrap(),
            ProxTerm::hyperplane(v(&[3.0, 0.0]), 0.0).unwrap(),
        ];
        let p = Problem::new(SmoothTerm::zero(2), g, ProxTerm::zero(2)).unwrap();
        let pr = default_probabilities(&p, &Sampling::ByMatrixNorm).unwrap();
        assert!((pr[0] - 0.25).abs() < 1e-15 && (pr[1] - 0.75).abs() < 1e-15);
        assert!(default_probabilities(&p, &Sampling::BySmoothness).is_err());
        assert_eq!(default_probabilities(&p, &Sampling::Uniform).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn decreasing_schedule_needs_strong_convexity() {
        assert!(ResolvedSchedule::decreasing_a(10.0, 0.0, 1.0).is_err());
        let s = ResolvedSchedule::decreasing_a(10.0, 0.5, 1.0).unwrap();
        assert_eq!(s.eta(0), 2.0 / (0.5 * 10.0));
    }

    #[test]
    fn zero_iterations_trace() {
        let p = Problem::new(SmoothTerm::half_squared_distance(v(&[1.0])), vec![], ProxTerm::zero(1)).unwrap();
        let cfg = StepConfig::constant(0.5).with_max_iters(0);
        let tr = solve(&p, &cfg, EstimatorKind::Full).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr[0].t, 0);
    }
}
