//! Synthetic generators, dataset ingestion and problem builders.

pub mod builders;
pub mod data;
pub mod description;
pub mod generators;

pub use builders::{
    build_consensus_constraints, build_constrained_regression, build_dantzig, build_fused_lasso, build_group_lasso,
    build_kaczmarz_problem, build_svm, difference_row, least_squares_term, path_incidence, FusedForm, Labels,
};
pub use data::{load_libsvm, parse_libsvm, write_libsvm, Dataset};
pub use description::{builder_params, describe_pd_system, ParamSpec, ProblemDescription, BUILDERS};
pub use generators::{
    a9a_standin, gaussian_dataset, gaussian_matrix, gaussian_vector, gen_random_pd_system, gisette_standin, rng_from_seed,
    PdSystem, A9A_DIM,
};
