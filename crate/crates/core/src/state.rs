//! Solver state and step configuration.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::linalg::Vector;

/// Iterate, dual table and its running average.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vector,
    pub y: Vec<Vector>,
    pub y_bar: Vector,
    pub t: u64,
}

impl SolverState {
    /// `y⁰ = 0`
    pub fn new(x0: Vector, m: usize) -> Self {
        let d = x0.len();
        SolverState { y: vec![Vector::zeros(d); m], y_bar: Vector::zeros(d), x: x0, t: 0 }
    }

    pub fn with_duals(x0: Vector, y: Vec<Vector>) -> Result<Self> {
        for yj in &y {
            check_dim(x0.len(), yj.len())?;
        }
        let mut s = SolverState { y_bar: Vector::zeros(x0.len()), x: x0, y, t: 0 };
        s.y_bar = s.aggregate_dual();
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// `(1/m) Σₖ yₖ` computed from scratch; zero when `m = 0`.
    pub fn aggregate_dual(&self) -> Vector {
        let mut acc = Vector::zeros(self.x.len());
        if self.y.is_empty() {
            return acc;
        }
        for yk in &self.y {
            acc += yk;
        }
        acc / self.y.len() as f64
    }

    /// Replace the incrementally maintained `ȳ` by the exact mean.
    pub fn refresh_dual(&mut self) {
        self.y_bar = self.aggregate_dual();
    }

    /// `‖ȳ − (1/m) Σₖ yₖ‖`
    pub fn dual_drift(&self) -> f64 {
        (self.aggregate_dual() - &self.y_bar).norm()
    }
}

/// Stepsize schedule; `None` parameters are filled from the theory defaults.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant { eta: Option<f64> },
    /// `ηᵗ = 2 / (μω(a + t))`
    DecreasingA { a: Option<f64> },
    /// `ηᵗ⁻¹ = 2 / (a + μt)`
    SgdDecreasing { a: Option<f64> },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Constant { eta: None }
    }
}

impl Schedule {
    pub fn name(&self) -> &'static str {
        match self {
            Schedule::Constant { .. } => "constant",
            Schedule::DecreasingA { .. } => "decreasing_a",
            Schedule::SgdDecreasing { .. } => "sgd_decreasing",
        }
    }
}

/// How `j` is sampled.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Sampling {
    #[default]
    Uniform,
    ByMatrixNorm,
    BySmoothness,
    Explicit(Vec<f64>),
}

impl Sampling {
    pub fn name(&self) -> &'static str {
        match self {
            Sampling::Uniform => "uniform",
            Sampling::ByMatrixNorm => "by_matrix_norm",
            Sampling::BySmoothness => "by_smoothness",
            Sampling::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Sampling::Uniform),
            "by_matrix_norm" => Ok(Sampling::ByMatrixNorm),
            "by_smoothness" => Ok(Sampling::BySmoothness),
            _ => Err(Error::config(format!("unknown sampling mode '{s}'"))),
        }
    }
}

/// How each iteration handles the `gⱼ` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMode {
    /// One sampled `gⱼ` per iteration with the dual table.
    #[default]
    Decoupled,
    /// Dual-average-only variant for affine constraints.
    LinearConstraints,
    /// Exact projection onto the intersection of all affine constraints.
    FullProjection,
}

impl ProjectionMode {
    pub fn name(self) -> &'static str {
        match self {
            ProjectionMode::Decoupled => "decoupled",
            ProjectionMode::LinearConstraints => "linear_constraints",
            ProjectionMode::FullProjection => "full_projection",
        }
    }
}

impl FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decoupled" => Ok(ProjectionMode::Decoupled),
            "linear_constraints" => Ok(ProjectionMode::LinearConstraints),
            "full_projection" => Ok(ProjectionMode::FullProjection),
            _ => Err(Error::config(format!("unknown projection mode '{s}'"))),
        }
    }
}

pub const DEFAULT_DUAL_REFRESH: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub schedule: Schedule,
    pub sampling: Sampling,
    pub mode: ProjectionMode,
    pub minibatch: usize,
    pub seed: u64,
    pub max_iters: u64,
    /// Stop once `‖xᵗ⁺¹ − xᵗ‖ + ‖zᵗ − xᵗ⁺¹‖ ≤ tol`; `0` disables.
    pub tol: f64,
    /// Permit a constant `η > η₀` (logged as a warning).
    pub allow_large_step: bool,
    pub trace_stride: u64,
    pub dual_refresh: u64,
    pub x0: Option<Vector>,
    pub record_wall_time: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            schedule: Schedule::default(),
            sampling: Sampling::default(),
            mode: ProjectionMode::default(),
            minibatch: 1,
            seed: 0,
            max_iters: 1000,
            tol: 0.0,
            allow_large_step: false,
            trace_stride: 1,
            dual_refresh: DEFAULT_DUAL_REFRESH,
            x0: None,
            record_wall_time: false,
        }
    }
}

impl StepConfig {
    pub fn constant(eta: f64) -> Self {
        StepConfig { schedule: Schedule::Constant { eta: Some(eta) }, ..Default::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_iters(mut self, n: u64) -> Self {
        self.max_iters = n;
        self
    }

    pub fn with_sampling(mut self, s: Sampling) -> Self {
        self.sampling = s;
        self
    }

    pub fn with_stride(mut self, s: u64) -> Self {
        self.trace_stride = s;
        self
    }

    pub fn with_x0(mut self, x0: Vector) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_minibatch(mut self, tau: usize) -> Self {
        self.minibatch = tau;
        self
    }

    pub fn with_mode(mut self, mode: ProjectionMode) -> Self {
        self.mode = mode;
        self
    }
}
