use decoupling::problems::{gaussian_matrix, gaussian_vector, rng_from_seed};
use decoupling::prox::{
    brute_force_prox, moreau_conjugate_prox, prox_composition_general, prox_l1, prox_l1_composition, AffineSet,
    GroupSpec, LinearMap, PiecewiseLinearPhi,
};
use decoupling::{InnerFunction, Matrix, ProxTerm, Vector};
use proptest::prelude::*;

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, d)
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Finite-valued terms on `ℝ³` built from a seed.
fn finite_term(kind: usize, seed: u64) -> ProxTerm {
    let mut rng = rng_from_seed(seed);
    let a = gaussian_vector(&mut rng, 3, 1.0);
    match kind {
        0 => ProxTerm::l1(3, 0.7).unwrap(),
        1 => ProxTerm::hinge(a, 1.0).unwrap(),
        2 => ProxTerm::group_norm(3, GroupSpec::new(vec![0, 2], 3).unwrap(), 1.3).unwrap(),
        3 => ProxTerm::distance(a),
        4 => ProxTerm::piecewise_linear(a, PiecewiseLinearPhi::new(-0.4, 1.1).unwrap()).unwrap(),
        5 => ProxTerm::quadratic_row(a, 0.5, 2.0).unwrap(),
        _ => ProxTerm::composition(gaussian_matrix(&mut rng, 3, 2, 1.0), InnerFunction::L1 { weight: 0.8 }).unwrap(),
    }
}

/// Terms of every family, including indicators.
fn any_term(kind: usize, seed: u64) -> ProxTerm {
    let mut rng = rng_from_seed(seed);
    let a = gaussian_vector(&mut rng, 3, 1.0);
    match kind {
        0..=6 => finite_term(kind, seed),
        7 => ProxTerm::hyperplane(a, 0.3).unwrap(),
        8 => ProxTerm::slab(a, -0.2, 0.5).unwrap(),
        9 => {
            let m = gaussian_matrix(&mut rng, 3, 2, 1.0);
            let b = m.transpose() * gaussian_vector(&mut rng, 3, 1.0);
            ProxTerm::affine(m, b).unwrap()
        }
        _ => ProxTerm::squared_distance(a, 0.6).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prox_is_firmly_nonexpansive(kind in 0usize..11, seed in 0u64..1000, x in vec_strategy(3), y in vec_strategy(3), eta in 0.05..5.0f64) {
        let g = any_term(kind, seed);
        let (x, y) = (v(&x), v(&y));
        let (px, py) = (g.prox(&x, eta).unwrap(), g.prox(&y, eta).unwrap());
        let lhs = (&px - &py).norm_squared();
        let rhs = (&px - &py).dot(&(&x - &y));
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "{lhs} > {rhs}");
    }

    #[test]
    fn prox_output_is_in_domain_and_idempotent_for_indicators(kind in 7usize..10, seed in 0u64..1000, x in vec_strategy(3), eta in 0.05..5.0f64) {
        let g = any_term(kind, seed);
        let p = g.prox(&v(&x), eta).unwrap();
        prop_assert_eq!(g.value(&p), 0.0);
        let q = g.prox(&p, eta).unwrap();
        prop_assert!((&p - &q).norm() <= 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn prox_matches_numerical_minimizer(kind in 0usize..7, seed in 0u64..1000, x in vec_strategy(3), eta in 0.1..3.0f64) {
        let g = finite_term(kind, seed);
        let x = v(&x);
        let p = g.prox(&x, eta).unwrap();
        let f = |u: &Vector| g.value(u);
        let numeric = brute_force_prox(&x, &f, eta, 1e-10).unwrap();
        let obj = |u: &Vector| g.value(u) + (u - &x).norm_squared() / (2.0 * eta);
        // the exact prox is never worse than the numerical search
        prop_assert!(obj(&p) <= obj(&numeric) + 1e-9, "{} > {}", obj(&p), obj(&numeric));
        prop_assert!((&p - &numeric).norm() <= 1e-4, "{p} vs {numeric}");
    }

    #[test]
    fn moreau_decomposition_for_l1(x in vec_strategy(4), w in 0.1..3.0f64, eta in 0.1..3.0f64) {
        // g = w‖·‖₁ has g* = indicator of the box [−w, w]
        let x = v(&x);
        let p = prox_l1(&x, eta * w).unwrap();
        let conj = moreau_conjugate_prox(&(&x / eta), |u, l| prox_l1(u, l * w).unwrap(), 1.0 / eta).unwrap();
        let clip = (&x / eta).map(|t| t.clamp(-w, w));
        prop_assert!((&conj - &clip).amax() <= 1e-12);
        prop_assert!((&p + &clip * eta - &x).amax() <= 1e-12);
    }

    #[test]
    fn l1_composition_agrees_with_metric_solver(seed in 0u64..500, x in vec_strategy(4), eta in 0.1..3.0f64, k in 1usize..4) {
        let mut rng = rng_from_seed(seed);
        // well conditioned so the iterative solver is reliable
        let a = gaussian_matrix(&mut rng, 4, k, 1.0) + Matrix::identity(4, k) * 3.0;
        let x = v(&x);
        let exact = prox_l1_composition(&x, &a, 0.9, eta).unwrap();
        let map = LinearMap::new(a).unwrap();
        let general = prox_composition_general(&x, &map, |t, l| prox_l1(t, l * 0.9).unwrap(), eta).unwrap();
        prop_assert!((&exact - &general).norm() <= 1e-7 * (1.0 + exact.norm()), "{exact} vs {general}");
    }
}

#[test]
fn l1_composition_on_ill_conditioned_map_is_optimal() {
    let mut rng = rng_from_seed(77);
    for trial in 0..50 {
        let d = 5;
        let q = gaussian_matrix(&mut rng, d, d, 1.0).qr().q();
        let sigma = Vector::from_fn(d, |i, _| 10f64.powi(-(2 * i as i32)));
        let a = &q * Matrix::from_diagonal(&sigma);
        let x = gaussian_vector(&mut rng, d, 2.0);
        let eta = 0.5 + trial as f64 * 0.05;
        let w = 0.3;
        let u = prox_l1_composition(&x, &a, w, eta).unwrap();
        let obj = |u: &Vector| w * (a.transpose() * u).lp_norm(1) + (u - &x).norm_squared() / (2.0 * eta);
        let base = obj(&u);
        for _ in 0..200 {
            let du = gaussian_vector(&mut rng, d, 1e-3);
            assert!(base <= obj(&(&u + du)) + 1e-12, "trial {trial}");
        }
    }
}

#[test]
fn affine_projection_on_ill_conditioned_constraints() {
    let mut rng = rng_from_seed(5);
    for trial in 0..40 {
        let (d, k) = (8, 4);
        let u = gaussian_matrix(&mut rng, d, k, 1.0).qr().q();
        let vt = gaussian_matrix(&mut rng, k, k, 1.0).qr().q();
        let sigma = Vector::from_fn(k, |i, _| 10f64.powi(-2 * i as i32));
        let a = &u * Matrix::from_diagonal(&sigma) * vt.transpose();
        let p = gaussian_vector(&mut rng, d, 1.0);
        let set = AffineSet::new(a.clone(), a.transpose() * &p).unwrap();
        let x = gaussian_vector(&mut rng, d, 3.0);
        let px = set.project(&x).unwrap();
        // κ = 10⁶ keeps the constructed U accurate to about 1e-10
        // x − Px lies in range(A) and Px − p lies in its orthogonal complement
        let step = &x - &px;
        let off_range = &step - &u * (u.transpose() * &step);
        assert!(off_range.norm() <= 1e-8 * (1.0 + x.norm()), "trial {trial}: {}", off_range.norm());
        let along = u.transpose() * (&px - &p);
        assert!(along.norm() <= 1e-8 * (1.0 + x.norm()), "trial {trial}: {}", along.norm());
        let again = set.project(&px).unwrap();
        assert!((&again - &px).norm() <= 1e-12 * (1.0 + px.norm()));
    }
}

#[test]
fn projections_onto_simple_sets() {
    let slab = ProxTerm::slab(v(&[0.0, 2.0]), 1.0, 0.5).unwrap();
    // 2·y must land in [0.5, 1.5]
    assert_eq!(slab.prox(&v(&[3.0, 4.0]), 1.0).unwrap(), v(&[3.0, 0.75]));
    assert_eq!(slab.prox(&v(&[3.0, 0.5]), 1.0).unwrap(), v(&[3.0, 0.5]));
    let point = ProxTerm::composition(Matrix::identity(2, 2), InnerFunction::Point { target: v(&[1.0, -1.0]) }).unwrap();
    assert!((point.prox(&v(&[7.0, 8.0]), 2.0).unwrap() - v(&[1.0, -1.0])).norm() < 1e-14);
}

#[test]
fn metric_prox_does_not_stop_on_a_stalled_momentum_step() {
    // the look-ahead step lands back on θ = 0 although 0 is not optimal
    let mut rng = rng_from_seed(486);
    let a = gaussian_matrix(&mut rng, 4, 3, 1.0) + Matrix::identity(4, 3) * 3.0;
    let x = v(&[-3.684605216471669, 4.126776660522478, -1.0573050039407759, 0.0]);
    let eta = 2.124303916076688;
    let exact = prox_l1_composition(&x, &a, 0.9, eta).unwrap();
    let map = LinearMap::new(a).unwrap();
    let general = prox_composition_general(&x, &map, |t, l| prox_l1(t, l * 0.9).unwrap(), eta).unwrap();
    assert!((&exact - &general).norm() < 1e-9, "{exact} vs {general}");
}
