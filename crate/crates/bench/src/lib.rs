//! Benchmark harness for the decoupling solver: run configurations, comparisons and invariant checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod run;
