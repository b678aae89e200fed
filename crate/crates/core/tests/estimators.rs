use decoupling::estimators::{saga_with_indices, sgd_with_indices, svrg_with_indices, SagaMemory, SvrgMemory};
use decoupling::problems::{gaussian_dataset, gaussian_vector, least_squares_term, rng_from_seed};
use decoupling::{bregman_divergence, Estimator, EstimatorKind, Row, SmoothComponent, SmoothTerm, Vector};
use proptest::prelude::*;
use rand::Rng;

fn least_squares(seed: u64) -> SmoothTerm {
    least_squares_term(&gaussian_dataset(12, 4, 0.3, seed).unwrap(), 0.05).unwrap()
}

fn logistic(seed: u64) -> SmoothTerm {
    let mut rng = rng_from_seed(seed);
    let comps = (0..10)
        .map(|i| SmoothComponent::Logistic {
            row: Row::Dense(gaussian_vector(&mut rng, 4, 1.0)),
            label: if i % 3 == 0 { -1.0 } else { 1.0 },
            ridge: 0.01,
        })
        .collect::<Vec<_>>();
    let l = comps.iter().map(SmoothComponent::curvature_bound).fold(0.0, f64::max);
    SmoothTerm::new(4, comps, l, 0.01).unwrap()
}

fn smooth(kind: u8, seed: u64) -> SmoothTerm {
    if kind == 0 {
        least_squares(seed)
    } else {
        logistic(seed)
    }
}

fn point(seed: u64, scale: f64) -> Vector {
    gaussian_vector(&mut rng_from_seed(seed), 4, scale)
}

/// Exact mean over a uniformly drawn single index.
fn mean_over_indices(n: usize, mut f: impl FnMut(usize) -> Vector) -> Vector {
    (0..n).map(&mut f).fold(Vector::zeros(4), |acc, v| acc + v) / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_index_estimates_are_unbiased(kind in 0u8..2, seed in 0u64..1000) {
        let f = smooth(kind, seed);
        let (x, u) = (point(seed + 1, 2.0), point(seed + 2, 2.0));
        let g = f.gradient(&x);
        let n = f.n();

        let sgd = mean_over_indices(n, |i| sgd_with_indices(&f, &x, &[i]));
        prop_assert!((&sgd - &g).norm() <= 1e-12 * (1.0 + g.norm()));

        let svrg_mem = SvrgMemory::new(&f, &u, 1);
        let svrg = mean_over_indices(n, |i| svrg_with_indices(&mut svrg_mem.clone(), &f, &x, &[i], false));
        prop_assert!((&svrg - &g).norm() <= 1e-12 * (1.0 + g.norm()));

        let saga_mem = SagaMemory::new(&f, &u);
        let saga = mean_over_indices(n, |i| saga_with_indices(&mut saga_mem.clone(), &f, &x, &[i]));
        prop_assert!((&saga - &g).norm() <= 1e-12 * (1.0 + g.norm()));
    }

    #[test]
    fn expected_smoothness_bound(kind in 0u8..2, seed in 0u64..1000) {
        // (1/n) Σ ‖∇fᵢ(x) − ∇fᵢ(u)‖² ≤ 2L D_f(x, u)
        let f = smooth(kind, seed);
        let (x, u) = (point(seed + 3, 3.0), point(seed + 4, 3.0));
        let lhs = (0..f.n())
            .map(|i| (f.component_gradient(i, &x) - f.component_gradient(i, &u)).norm_squared())
            .sum::<f64>() / f.n() as f64;
        let rhs = 2.0 * f.lipschitz() * bregman_divergence(&f, &x, &u).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10) + 1e-12, "{lhs} > {rhs}");
    }

    #[test]
    fn bregman_symmetrization(kind in 0u8..2, seed in 0u64..1000) {
        let f = smooth(kind, seed);
        let (x, y) = (point(seed + 5, 2.0), point(seed + 6, 2.0));
        let dxy = bregman_divergence(&f, &x, &y).unwrap();
        let dyx = bregman_divergence(&f, &y, &x).unwrap();
        prop_assert!(dxy >= -1e-12 && dyx >= -1e-12);
        let inner = (f.gradient(&x) - f.gradient(&y)).dot(&(&x - &y));
        prop_assert!((dxy + dyx - inner).abs() <= 1e-10 * (1.0 + inner.abs()));
        let mu = f.strong_convexity();
        prop_assert!(dxy >= 0.5 * mu * (&x - &y).norm_squared() - 1e-10);
    }

    #[test]
    fn bregman_of_quadratic_is_exact(seed in 0u64..1000) {
        let f = least_squares(seed);
        let (x, y) = (point(seed + 7, 2.0), point(seed + 8, 2.0));
        let h = f.components().iter().map(|c| c.hessian(4).unwrap()).fold(decoupling::Matrix::zeros(4, 4), |a, b| a + b)
            / f.n() as f64;
        let diff = &x - &y;
        let exact = 0.5 * diff.dot(&(&h * &diff));
        let d = bregman_divergence(&f, &x, &y).unwrap();
        prop_assert!((d - exact).abs() <= 1e-10 * (1.0 + exact));
    }

    #[test]
    fn saga_mean_tracks_table(seed in 0u64..1000, tau in 1usize..5) {
        let f = least_squares(seed);
        let mut rng = rng_from_seed(seed);
        let mut mem = SagaMemory::new(&f, &point(seed, 1.0));
        for _ in 0..200 {
            let x = gaussian_vector(&mut rng, 4, 1.0);
            let idx: Vec<usize> = (0..tau).map(|_| rng.random_range(0..f.n())).collect();
            saga_with_indices(&mut mem, &f, &x, &idx);
        }
        prop_assert!(mem.mean_drift() <= 1e-12);
    }
}

#[test]
fn variance_reduced_estimates_are_exact_at_their_anchor() {
    let f = least_squares(3);
    let x = point(9, 1.0);
    let g = f.gradient(&x);
    let mut svrg = SvrgMemory::new(&f, &x, 1);
    let mut saga = SagaMemory::new(&f, &x);
    for i in 0..f.n() {
        assert!((svrg_with_indices(&mut svrg, &f, &x, &[i], false) - &g).norm() < 1e-13);
        assert!((saga_with_indices(&mut saga, &f, &x, &[i]) - &g).norm() < 1e-13);
    }
}

#[test]
fn epochs_count_component_gradients() {
    let f = least_squares(4);
    let x = point(1, 1.0);
    let mut rng = rng_from_seed(0);
    let mut full = Estimator::new(EstimatorKind::Full, &f, &x, 1, 100).unwrap();
    let mut sgd = Estimator::new(EstimatorKind::Sgd, &f, &x, 3, 100).unwrap();
    for _ in 0..10 {
        full.estimate(&f, &x, &mut rng);
        sgd.estimate(&f, &x, &mut rng);
    }
    assert!((full.epochs() - 10.0).abs() < 1e-12);
    assert!((sgd.epochs() - 30.0 / f.n() as f64).abs() < 1e-12);
}
