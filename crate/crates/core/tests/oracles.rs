//! Solutions checked against independent closed forms, enumerations and grid searches.

use decoupling::linalg::{min_positive_eigenvalue, sym_eigenvalues, Matrix, Row, SparseRow, Vector};
use decoupling::problems::{
    build_consensus_constraints, build_dantzig, build_fused_lasso, build_svm, gaussian_dataset, gaussian_matrix,
    gaussian_vector, least_squares_term, parse_libsvm, path_incidence, rng_from_seed, write_libsvm, Dataset,
    FusedForm, ProblemDescription,
};
use decoupling::{eval_objective, reference_solution, Problem, ProxKind, SmoothComponent, SmoothTerm};
use proptest::prelude::*;
use rand::Rng;

fn mean_hessian(f: &SmoothTerm) -> Matrix {
    let d = f.dim();
    f.components().iter().map(|c| c.hessian(d).unwrap()).fold(Matrix::zeros(d, d), |a, b| a + b) / f.n() as f64
}

/// `L` bounds every component curvature and `μ` is the exact minimum eigenvalue of the mean Hessian.
fn assert_certified(f: &SmoothTerm) {
    let d = f.dim();
    let top = f
        .components()
        .iter()
        .map(|c| *sym_eigenvalues(&c.hessian(d).unwrap()).last().unwrap())
        .fold(0.0, f64::max);
    assert!(f.lipschitz() >= top * (1.0 - 1e-12), "L = {} < {top}", f.lipschitz());
    let mu = sym_eigenvalues(&mean_hessian(f))[0].max(0.0);
    assert!(f.strong_convexity() <= mu * (1.0 + 1e-10) + 1e-14, "μ = {} > {mu}", f.strong_convexity());
    assert!(f.strong_convexity() >= mu * (1.0 - 1e-8) - 1e-12, "μ = {} < {mu}", f.strong_convexity());
}

#[test]
fn builders_certify_smoothness_and_strong_convexity() {
    for seed in 0..10 {
        assert_certified(&least_squares_term(&gaussian_dataset(30, 6, 0.2, seed).unwrap(), 0.01 * seed as f64).unwrap());
        let p = ProblemDescription::new("pd_system", seed).with_param("d", 12).build().unwrap();
        assert_certified(p.smooth());
    }
    let svm = build_svm(&toy_svm_data(), 0.3).unwrap();
    assert_eq!((svm.smooth().lipschitz(), svm.smooth().strong_convexity()), (0.3, 0.3));
}

#[test]
fn fused_lasso_difference_operator_spectrum() {
    for d in [3usize, 8, 25] {
        let p = build_fused_lasso(&gaussian_dataset(40, d, 0.1, 1).unwrap(), 0.1, 0.2, FusedForm::Penalty).unwrap();
        assert_eq!(p.m(), d - 1);
        let norms: Vec<f64> = p.prox_terms().iter().map(|g| g.matrix_norm().unwrap()).collect();
        let step_bound = norms.iter().map(|n| 1.0 / (n * n)).fold(f64::INFINITY, f64::min);
        assert!((step_bound - 0.5).abs() < 1e-14);

        let rows: Vec<Vector> = p.prox_terms().iter().map(|g| g.linear_structure().unwrap().matrix.column(0).into_owned()).collect();
        let dmat = Matrix::from_columns(&rows).transpose();
        let gram = dmat.transpose() * &dmat;
        for i in 0..d {
            for j in 0..d {
                let expected = match (i, j) {
                    _ if i == j && (i == 0 || i == d - 1) => 1.0,
                    _ if i == j => 2.0,
                    _ if i.abs_diff(j) == 1 => -1.0,
                    _ => 0.0,
                };
                assert_eq!(gram[(i, j)], expected, "({i}, {j})");
            }
        }
        let lam = min_positive_eigenvalue(&gram, 1e-12).unwrap();
        let expected = 2.0 - 2.0 * (std::f64::consts::PI / d as f64).cos();
        assert!((lam - expected).abs() < 1e-12, "d = {d}: {lam} vs {expected}");
    }
    let slabs = build_fused_lasso(&gaussian_dataset(10, 4, 0.1, 2).unwrap(), 0.0, 0.0, FusedForm::Constraint { epsilon: 0.1 }).unwrap();
    assert!(slabs.prox_terms().iter().all(|g| matches!(g.kind(), ProxKind::Slab { .. })));
}

fn toy_svm_data() -> Dataset {
    let a = Matrix::from_row_slice(6, 2, &[1.0, 2.0, 2.0, 0.5, -0.5, 1.5, -1.0, -1.0, 0.5, -2.0, -2.0, 0.3]);
    let b = Vector::from_column_slice(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
    Dataset::from_dense(&a, &b).unwrap()
}

/// Coarse-to-fine grid minimization of a convex function on the plane.
fn grid_minimum(f: impl Fn(f64, f64) -> f64) -> (f64, f64, f64) {
    let (mut cx, mut cy, mut half) = (0.0, 0.0, 4.0);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for _ in 0..12 {
        let n = 80;
        for i in 0..=n {
            for j in 0..=n {
                let x = cx - half + 2.0 * half * i as f64 / n as f64;
                let y = cy - half + 2.0 * half * j as f64 / n as f64;
                let v = f(x, y);
                if v < best.0 {
                    best = (v, x, y);
                }
            }
        }
        (cx, cy) = (best.1, best.2);
        half *= 0.125;
    }
    best
}

#[test]
fn svm_matches_planar_grid_search() {
    for lambda in [0.1, 0.5, 2.0] {
        let p = build_svm(&toy_svm_data(), lambda).unwrap();
        let r = reference_solution(&p).unwrap();
        let (best, gx, gy) = grid_minimum(|x, y| eval_objective(&p, &Vector::from_column_slice(&[x, y])).unwrap());
        assert!(r.objective <= best + 1e-10, "λ = {lambda}: {} vs {best}", r.objective);
        assert!((r.objective - best).abs() < 1e-9);
        // strong convexity turns the objective gap into a distance bound
        let dist = ((r.x[0] - gx).powi(2) + (r.x[1] - gy).powi(2)).sqrt();
        assert!(dist <= (2.0 * 1e-9 / lambda).sqrt() + 1e-9, "λ = {lambda}: {dist}");
    }
}

/// `min ‖x‖₁ s.t. |Gx − c|∞ ≤ λ` in `ℝ³` by enumerating vertices of the lifted LP over `(x, t)`.
fn dantzig_lp(g: &Matrix, c: &Vector, lambda: f64) -> f64 {
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut r = vec![0.0; 6];
            r[i] = s;
            r[3 + i] = -1.0;
            rows.push((r, 0.0));
        }
        for s in [1.0, -1.0] {
            let mut r = vec![0.0; 6];
            for j in 0..3 {
                r[j] = s * g[(i, j)];
            }
            rows.push((r, lambda + s * c[i]));
        }
    }
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << 12) {
        if mask.count_ones() != 6 {
            continue;
        }
        let active: Vec<usize> = (0..12).filter(|k| mask >> k & 1 == 1).collect();
        let a = Matrix::from_fn(6, 6, |i, j| rows[active[i]].0[j]);
        let rhs = Vector::from_fn(6, |i, _| rows[active[i]].1);
        let Some(z) = a.clone().lu().solve(&rhs) else { continue };
        if (&a * &z - &rhs).amax() > 1e-9 {
            continue;
        }
        let feasible = rows.iter().all(|(r, b)| r.iter().zip(z.iter()).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9);
        if feasible {
            best = best.min(z[3] + z[4] + z[5]);
        }
    }
    best
}

#[test]
fn dantzig_selector_matches_vertex_enumeration() {
    let mut rng = rng_from_seed(31);
    for trial in 0..5 {
        let a = gaussian_matrix(&mut rng, 3, 3, 1.0) + Matrix::identity(3, 3);
        let b = gaussian_vector(&mut rng, 3, 1.0);
        let lambda = rng.random_range(0.05..0.5);
        let p = build_dantzig(&a, &b, lambda).unwrap();
        let r = reference_solution(&p).unwrap();
        let lp = dantzig_lp(&(a.transpose() * &a), &(a.transpose() * &b), lambda);
        assert!(r.objective.is_finite(), "trial {trial}: infeasible reference");
        assert!((r.objective - lp).abs() < 1e-7 * (1.0 + lp), "trial {trial}: {} vs {lp}", r.objective);
    }
}

#[test]
fn consensus_matches_centralized_minimizer() {
    let mut rng = rng_from_seed(8);
    let (nodes, k) = (5, 2);
    let mut comps = Vec::new();
    let mut h_sum = Matrix::zeros(k, k);
    let mut hc_sum = Vector::zeros(k);
    for _ in 0..nodes {
        let m = gaussian_matrix(&mut rng, k, k, 1.0);
        let h = &m * m.transpose() + Matrix::identity(k, k) * 0.5;
        let c = gaussian_vector(&mut rng, k, 2.0);
        h_sum += &h;
        hc_sum += &h * &c;
        comps.push(SmoothComponent::Quadratic { hessian: h, center: c });
    }
    let centralized = h_sum.lu().solve(&hc_sum).unwrap();
    for ring in [false, true] {
        let p: Problem = build_consensus_constraints(&comps, k, &path_incidence(nodes, ring)).unwrap();
        let r = reference_solution(&p).unwrap();
        for i in 0..nodes {
            let block = r.x.rows(i * k, k);
            assert!((block - &centralized).norm() < 1e-9, "ring = {ring}, node {i}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn libsvm_text_round_trips(seed in 0u64..10_000, n in 1usize..20, d in 1usize..30) {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let mut idx = Vec::new();
            let mut vals = Vec::new();
            for i in 0..d {
                if rng.random_bool(0.3) {
                    idx.push(i);
                    vals.push(rng.random_range(-1e3..1e3));
                }
            }
            rows.push(Row::Sparse(SparseRow::new(d, idx, vals).unwrap()));
            labels.push(if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        }
        let data = Dataset::new(rows, labels, d).unwrap();
        let mut text = Vec::new();
        write_libsvm(&data, &mut text).unwrap();
        let back = parse_libsvm(text.as_slice(), Some(d)).unwrap();
        prop_assert_eq!(back.labels(), data.labels());
        prop_assert_eq!(back.matrix(), data.matrix());
    }
}
