use decoupling::problems::{gaussian_dataset, gaussian_vector, least_squares_term, rng_from_seed};
use decoupling::reductions::douglas_rachford_config;
use decoupling::{
    reference_solution, EstimatorKind, ProjectionMode, Problem, ProxTerm, Sampling, Schedule, Solver, StepConfig,
    Vector,
};
use proptest::prelude::*;

/// Ridge least squares with hyperplanes through a common point, a slab and an ℓ₁ regularizer.
fn problem(seed: u64, with_l1: bool) -> Problem {
    let d = 6;
    let smooth = least_squares_term(&gaussian_dataset(25, d, 0.5, seed).unwrap(), 0.1).unwrap();
    let mut rng = rng_from_seed(seed + 100);
    let p = gaussian_vector(&mut rng, d, 0.5);
    let mut terms = Vec::new();
    for _ in 0..3 {
        let a = gaussian_vector(&mut rng, d, 1.0);
        let b = a.dot(&p);
        terms.push(ProxTerm::hyperplane(a, b).unwrap());
    }
    if with_l1 {
        let c = gaussian_vector(&mut rng, d, 1.0);
        terms.push(ProxTerm::slab(c.clone(), c.dot(&p), 0.2).unwrap());
    }
    let r = if with_l1 { ProxTerm::l1(d, 0.05).unwrap() } else { ProxTerm::zero(d) };
    Problem::new(smooth, terms, r).unwrap()
}

fn final_x(problem: &Problem, config: StepConfig, kind: EstimatorKind) -> Vector {
    let mut s = Solver::new(problem, config, kind).unwrap();
    s.run(None).unwrap();
    s.into_state().x
}

#[test]
fn optimum_is_a_fixed_point_of_the_iteration() {
    for seed in 0..5 {
        let p = problem(seed, true);
        let r = reference_solution(&p).unwrap();
        for kind in [EstimatorKind::Full, EstimatorKind::Svrg, EstimatorKind::Saga] {
            let config = StepConfig::default().with_seed(seed).with_max_iters(300);
            let mut s = Solver::with_state(&p, config, kind, r.to_state()).unwrap();
            for _ in 0..300 {
                s.step_once().unwrap();
            }
            let drift = (&s.state().x - &r.x).norm();
            assert!(drift < 1e-9, "seed {seed} {kind:?}: {drift}");
        }
    }
}

#[test]
fn every_variance_reduced_estimator_reaches_the_optimum() {
    let p = problem(11, true);
    let r = reference_solution(&p).unwrap();
    for kind in [EstimatorKind::Full, EstimatorKind::Svrg, EstimatorKind::Saga] {
        for sampling in [Sampling::Uniform, Sampling::ByMatrixNorm] {
            let config = StepConfig::default().with_seed(3).with_max_iters(30_000).with_sampling(sampling.clone());
            let x = final_x(&p, config, kind);
            let dist = (&x - &r.x).norm_squared() / r.x.norm_squared();
            assert!(dist < 1e-20, "{kind:?} {sampling}: {dist}");
        }
    }
}

#[test]
fn constraint_handling_modes_agree() {
    let p = problem(12, false);
    let r = reference_solution(&p).unwrap();
    for mode in [ProjectionMode::Decoupled, ProjectionMode::LinearConstraints, ProjectionMode::FullProjection] {
        let config = StepConfig::default().with_seed(1).with_max_iters(20_000).with_mode(mode);
        let x = final_x(&p, config, EstimatorKind::Saga);
        assert!((&x - &r.x).norm() < 1e-9 * (1.0 + r.x.norm()), "{mode:?}");
    }
}

#[test]
fn trace_reports_distance_to_reference() {
    let p = problem(13, true);
    let r = reference_solution(&p).unwrap();
    let config = StepConfig::default().with_seed(2).with_max_iters(5000).with_stride(500);
    let trace = Solver::new(&p, config, EstimatorKind::Saga).unwrap().run(Some(&r)).unwrap();
    assert_eq!(trace.len(), 11);
    assert_eq!(trace[0].t, 0);
    assert_eq!(trace[10].t, 5000);
    let first = trace[0].dist_sq.unwrap();
    let last = trace[10].dist_sq.unwrap();
    assert!(last < 1e-6 * first, "{first} → {last}");
    assert!(trace.iter().all(|t| t.objective_gap.is_some() && t.lyap_total.is_some()));
    assert!(trace.windows(2).all(|w| w[1].prox_evals > w[0].prox_evals && w[1].epochs > w[0].epochs));
}

#[test]
fn decreasing_schedule_converges() {
    let p = problem(14, true);
    let r = reference_solution(&p).unwrap();
    let mut config = StepConfig::default().with_seed(4).with_max_iters(20_000);
    config.schedule = Schedule::DecreasingA { a: None };
    let x = final_x(&p, config, EstimatorKind::Saga);
    assert!((&x - &r.x).norm_squared() < 1e-6 * r.x.norm_squared());
}

#[test]
fn douglas_rachford_solves_basis_pursuit_on_a_hyperplane() {
    // min ‖x‖₁ s.t. aᵀx = b has value |b| / ‖a‖∞ when the largest |aᵢ| is unique
    let a = Vector::from_column_slice(&[0.5, -2.0, 1.0, 0.25, 1.5]);
    let b = 3.0;
    let g = ProxTerm::hyperplane(a.clone(), b).unwrap();
    let cfg = douglas_rachford_config(g, ProxTerm::l1(5, 1.0).unwrap(), &Vector::zeros(5), 1.0).unwrap();
    let mut s = Solver::new(&cfg.problem, cfg.config.clone().with_max_iters(2000), cfg.estimator).unwrap();
    for _ in 0..2000 {
        s.step_once().unwrap();
    }
    let x = &s.state().x;
    assert!((a.dot(x) - b).abs() < 1e-12);
    assert!((x.lp_norm(1) - 1.5).abs() < 1e-10, "{x}");
    assert!((x[1] + 1.5).abs() < 1e-10);
}

#[test]
fn zero_iterations_leave_the_start_untouched() {
    let p = problem(15, true);
    let x0 = gaussian_vector(&mut rng_from_seed(1), 6, 1.0);
    let config = StepConfig::default().with_max_iters(0).with_x0(x0.clone());
    let mut s = Solver::new(&p, config, EstimatorKind::Saga).unwrap();
    let trace = s.run(None).unwrap();
    assert_eq!(trace.len(), 1);
    assert_eq!(s.state().x, x0);
    assert_eq!(s.prox_evals(), 0);
}

#[test]
fn mismatched_start_is_rejected() {
    let p = problem(16, true);
    let config = StepConfig::default().with_x0(Vector::zeros(5));
    assert!(Solver::new(&p, config, EstimatorKind::Saga).is_err());
    let with_l1 = problem(16, true);
    let config = StepConfig::default().with_mode(ProjectionMode::FullProjection);
    assert!(Solver::new(&with_l1, config, EstimatorKind::Saga).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_reproducible_per_seed(seed in 0u64..10_000, kind in 0usize..4) {
        let kind = [EstimatorKind::Sgd, EstimatorKind::Svrg, EstimatorKind::Saga, EstimatorKind::Full][kind];
        let p = problem(seed % 7, true);
        let config = StepConfig::default().with_seed(seed).with_max_iters(300).with_stride(50);
        let a = Solver::new(&p, config.clone(), kind).unwrap().run(None).unwrap();
        let b = Solver::new(&p, config, kind).unwrap().run(None).unwrap();
        let strip = |t: &[decoupling::TraceRecord]| t.iter().map(|r| (r.t, r.objective, r.residual, r.prox_evals)).collect::<Vec<_>>();
        prop_assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn dual_average_matches_table(seed in 0u64..10_000) {
        let p = problem(seed % 5, true);
        let config = StepConfig::default().with_seed(seed).with_max_iters(500);
        let mut s = Solver::new(&p, config, EstimatorKind::Saga).unwrap();
        for _ in 0..500 {
            s.step_once().unwrap();
        }
        prop_assert!(s.state().dual_drift() < 1e-10 * (1.0 + s.state().y_bar.norm()));
    }
}
