//! Stochastic decoupling solver for `min_x f(x) + (1/m) Σⱼ gⱼ(x) + R(x)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod reductions;
pub mod solver;
pub mod state;
pub mod trace;

pub use error::{Error, Result};
pub use estimators::{Estimator, EstimatorConstants, EstimatorKind};
pub use linalg::{Matrix, Row, SparseRow, Vector};
pub use problem::{
    bregman_divergence, eval_objective, CustomTerm, InnerFunction, LinearStructure, Problem, ProxKind, ProxTerm,
    SmoothComponent, SmoothTerm,
};
pub use solver::{
    default_probabilities, key_lemma_check, lyapunov, reference_solution, solve, step, step_linear_constraints,
    step_timevarying, Reference, Solver, StepsizeDefaults,
};
pub use state::{ProjectionMode, Sampling, Schedule, SolverState, StepConfig};
pub use trace::TraceRecord;
