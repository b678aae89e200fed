use crate::error::{check_dim, Error, Result};
use crate::linalg::{column_rank, sym_eigenvalues, Matrix, Row, SparseRow, Vector};
use crate::problem::{Problem, ProxTerm, SmoothComponent, SmoothTerm};
use crate::prox::{GroupSpec, PiecewiseLinearPhi};

use super::data::Dataset;
use super::generators::{gaussian_vector, rng_from_seed};

/// `fᵢ = ½(aᵢᵀx − bᵢ)² + (ridge/2)‖x‖²` with `L = maxᵢ ‖aᵢ‖² + ridge` and exact `μ`.
pub fn least_squares_term(data: &Dataset, ridge: f64) -> Result<SmoothTerm> {
    if data.is_empty() {
        return Err(Error::arg("least squares needs at least one row"));
    }
    if !(ridge >= 0.0) {
        return Err(Error::arg(format!("ridge must be nonnegative, got {ridge}")));
    }
    let d = data.dim();
    let lipschitz = data.rows().iter().map(|r| r.norm_squared()).fold(0.0, f64::max) + ridge;
    let mu = if data.len() < d {
        ridge
    } else {
        let a = data.matrix();
        let gram = a.transpose() * &a / data.len() as f64;
        sym_eigenvalues(&gram)[0].max(0.0) + ridge
    };
    let comps = data
        .rows()
        .iter()
        .zip(data.labels())
        .map(|(r, &b)| SmoothComponent::LeastSquares { row: r.clone(), target: b, ridge })
        .collect();
    SmoothTerm::new(d, comps, lipschitz, mu.min(lipschitz))
}

/// `f = ½‖x‖²`, one hyperplane indicator per row of `W x = b`, `R = 0`.
pub fn build_kaczmarz_problem(w: &Matrix, b: &Vector) -> Result<Problem> {
    check_dim(w.nrows(), b.len())?;
    let d = w.ncols();
    let terms = (0..w.nrows())
        .map(|j| ProxTerm::hyperplane(w.row(j).transpose(), b[j]))
        .collect::<Result<Vec<_>>>()?;
    Problem::new(SmoothTerm::half_squared_distance(Vector::zeros(d)), terms, ProxTerm::zero(d))
}

/// Label source for constrained regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labels {
    Original,
    /// `b = A x₀` with `x₀ ~ N(0, 1/d)` drawn from `seed`.
    Consistent { seed: u64 },
}

/// First `m_constraints` rows become hard constraints `aⱼᵀx = bⱼ`; the rest form ridge least squares.
pub fn build_constrained_regression(
    data: &Dataset,
    m_constraints: usize,
    ridge: f64,
    labels: Labels,
) -> Result<Problem> {
    if m_constraints >= data.len() {
        return Err(Error::arg(format!(
            "need fewer constraints ({m_constraints}) than rows ({})",
            data.len()
        )));
    }
    let data = match labels {
        Labels::Original => data.clone(),
        Labels::Consistent { seed } => {
            let d = data.dim();
            let x0 = gaussian_vector(&mut rng_from_seed(seed), d, 1.0 / (d as f64).sqrt());
            let b = data.rows().iter().map(|r| r.dot(&x0)).collect();
            data.clone().with_labels(b)?
        }
    };
    let d = data.dim();
    let constraint_rows = data.head(m_constraints);
    let loss_rows = Dataset::new(
        data.rows()[m_constraints..].to_vec(),
        data.labels()[m_constraints..].to_vec(),
        d,
    )?;
    let smooth = least_squares_term(&loss_rows, ridge)?;
    let terms = constraint_rows
        .rows()
        .iter()
        .zip(constraint_rows.labels())
        .map(|(r, &b)| ProxTerm::hyperplane(r.to_dense(), b))
        .collect::<Result<Vec<_>>>()?;
    Problem::new(smooth, terms, ProxTerm::zero(d))
}

/// `f = (λ/2)‖x‖²`, `gⱼ = max{0, 1 − bⱼ aⱼᵀx}`, `R = 0`.
pub fn build_svm(data: &Dataset, lambda: f64) -> Result<Problem> {
    if !(lambda > 0.0) {
        return Err(Error::arg(format!("λ must be positive, got {lambda}")));
    }
    if let Some(b) = data.labels().iter().find(|&&b| b != 1.0 && b != -1.0) {
        return Err(Error::arg(format!("SVM labels must be ±1, found {b}")));
    }
    let d = data.dim();
    let quad = SmoothComponent::Quadratic { hessian: Matrix::identity(d, d) * lambda, center: Vector::zeros(d) };
    let smooth = SmoothTerm::new(d, vec![quad], lambda, lambda)?;
    let terms = data
        .rows()
        .iter()
        .zip(data.labels())
        .map(|(r, &b)| ProxTerm::hinge(r.to_dense(), b))
        .collect::<Result<Vec<_>>>()?;
    Problem::new(smooth, terms, ProxTerm::zero(d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusedForm {
    /// `gⱼ = ind{|xⱼ − xⱼ₊₁| ≤ ε}`
    Constraint { epsilon: f64 },
    /// `gⱼ = λ₂ |xⱼ − xⱼ₊₁|`
    Penalty,
}

/// Difference vector `eⱼ − eⱼ₊₁`.
pub fn difference_row(d: usize, j: usize) -> Vector {
    let mut v = Vector::zeros(d);
    v[j] = 1.0;
    v[j + 1] = -1.0;
    v
}

pub fn build_fused_lasso(data: &Dataset, lambda1: f64, lambda2: f64, form: FusedForm) -> Result<Problem> {
    let d = data.dim();
    if d < 2 {
        return Err(Error::arg("fused lasso needs d ≥ 2"));
    }
    if !(lambda1 >= 0.0) {
        return Err(Error::arg("λ₁ must be nonnegative"));
    }
    let smooth = least_squares_term(data, 0.0)?;
    let terms = (0..d - 1)
        .map(|j| match form {
            FusedForm::Constraint { epsilon } => ProxTerm::slab(difference_row(d, j), 0.0, epsilon),
            FusedForm::Penalty => ProxTerm::piecewise_linear(difference_row(d, j), PiecewiseLinearPhi::abs(lambda2)?),
        })
        .collect::<Result<Vec<_>>>()?;
    let r = if lambda1 > 0.0 { ProxTerm::l1(d, lambda1)? } else { ProxTerm::zero(d) };
    Problem::new(smooth, terms, r)
}

/// Least squares with `gⱼ = w‖x_{Gⱼ}‖` (0-based group indices), `R = 0`.
pub fn build_group_lasso(data: &Dataset, groups: &[Vec<usize>], weight: f64) -> Result<Problem> {
    let d = data.dim();
    let smooth = least_squares_term(data, 0.0)?;
    let terms = groups
        .iter()
        .map(|g| {
            if g.is_empty() {
                return Err(Error::arg("groups must be nonempty"));
            }
            ProxTerm::group_norm(d, GroupSpec::new(g.clone(), d)?, weight)
        })
        .collect::<Result<Vec<_>>>()?;
    Problem::new(smooth, terms, ProxTerm::zero(d))
}

/// `f ≡ 0`, `gⱼ = ind{|cⱼᵀx − (Aᵀb)ⱼ| ≤ λ}` with `cⱼ` the j-th column of `AᵀA`, `R = ‖·‖₁`.
pub fn build_dantzig(a: &Matrix, b: &Vector, lambda: f64) -> Result<Problem> {
    check_dim(a.nrows(), b.len())?;
    if !(lambda >= 0.0) {
        return Err(Error::arg(format!("λ must be nonnegative, got {lambda}")));
    }
    let d = a.ncols();
    let gram = a.transpose() * a;
    let atb = a.transpose() * b;
    let mut terms = Vec::with_capacity(d);
    for j in 0..d {
        let c = gram.column(j).into_owned();
        if c.norm_squared() == 0.0 {
            // constraint does not involve x
            if atb[j].abs() > lambda {
                return Err(Error::Infeasible(format!("constraint {j} reads |{}| ≤ {lambda}", atb[j])));
            }
            continue;
        }
        terms.push(ProxTerm::slab(c, atb[j], lambda)?);
    }
    Problem::new(SmoothTerm::zero(d), terms, ProxTerm::l1(d, 1.0)?)
}

/// Edge rows `eᵢ − eᵢ₊₁` of a path over `nodes` nodes, plus the closing edge for a ring.
pub fn path_incidence(nodes: usize, ring: bool) -> Matrix {
    let edges = if ring && nodes > 2 { nodes } else { nodes.saturating_sub(1) };
    let mut w = Matrix::zeros(edges, nodes);
    for e in 0..edges {
        w[(e, e)] = 1.0;
        w[(e, (e + 1) % nodes)] = -1.0;
    }
    w
}

fn lift_component(c: &SmoothComponent, node: usize, k: usize, dim: usize) -> Result<SmoothComponent> {
    let off = node * k;
    Ok(match c {
        SmoothComponent::Zero => SmoothComponent::Zero,
        SmoothComponent::Quadratic { hessian, center } => {
            check_dim(k, center.len())?;
            let mut h = Matrix::zeros(dim, dim);
            h.view_mut((off, off), (k, k)).copy_from(hessian);
            let mut cc = Vector::zeros(dim);
            cc.rows_mut(off, k).copy_from(center);
            SmoothComponent::Quadratic { hessian: h, center: cc }
        }
        SmoothComponent::LeastSquares { row, target, ridge: 0.0 } => {
            SmoothComponent::LeastSquares { row: lift_row(row, off, dim)?, target: *target, ridge: 0.0 }
        }
        SmoothComponent::Logistic { row, label, ridge: 0.0 } => {
            SmoothComponent::Logistic { row: lift_row(row, off, dim)?, label: *label, ridge: 0.0 }
        }
        _ => return Err(Error::arg("node functions with ridge terms cannot be lifted; use a quadratic component")),
    })
}

fn lift_row(row: &Row, off: usize, dim: usize) -> Result<Row> {
    let (indices, values): (Vec<usize>, Vec<f64>) = match row {
        Row::Dense(v) => v.iter().enumerate().filter(|(_, x)| **x != 0.0).map(|(i, &x)| (i + off, x)).unzip(),
        Row::Sparse(s) => s.indices.iter().zip(&s.values).map(|(&i, &x)| (i + off, x)).unzip(),
    };
    Ok(Row::Sparse(SparseRow::new(dim, indices, values)?))
}

/// Lift node functions `fᵢ : ℝᵏ → ℝ` to `x = (x₁, …, x_N)` with `f = (1/N) Σ fᵢ(xᵢ)`
/// and constraints `Σᵢ Wⱼᵢ xᵢ = 0` for every row `j` of `W`.
pub fn build_consensus_constraints(nodes: &[SmoothComponent], block_dim: usize, w: &Matrix) -> Result<Problem> {
    let n = nodes.len();
    if n < 2 || block_dim == 0 {
        return Err(Error::arg("need at least two nodes and a positive block dimension"));
    }
    check_dim(n, w.ncols())?;
    let ones = Vector::from_element(n, 1.0);
    let scale = w.amax().max(1.0);
    if (w * &ones).amax() > 1e-12 * scale * n as f64 || column_rank(w, 1e-10) != n - 1 {
        return Err(Error::arg("incidence rows must have null space spanned by the all-ones vector"));
    }
    let dim = n * block_dim;
    let lifted = nodes
        .iter()
        .enumerate()
        .map(|(i, c)| lift_component(c, i, block_dim, dim))
        .collect::<Result<Vec<_>>>()?;
    let quadratic = lifted.iter().all(|c| c.hessian(dim).is_some());
    let smooth = if quadratic {
        SmoothTerm::quadratic(dim, lifted)?
    } else {
        let l = lifted.iter().map(SmoothComponent::curvature_bound).fold(0.0, f64::max);
        SmoothTerm::new(dim, lifted, l, 0.0)?
    };
    let mut terms = Vec::new();
    for j in 0..w.nrows() {
        if w.row(j).amax() == 0.0 {
            return Err(Error::arg(format!("incidence row {j} is zero")));
        }
        let mut a = Matrix::zeros(dim, block_dim);
        for i in 0..n {
            for c in 0..block_dim {
                a[(i * block_dim + c, c)] = w[(j, i)];
            }
        }
        terms.push(if block_dim == 1 {
            ProxTerm::hyperplane(a.column(0).into_owned(), 0.0)?
        } else {
            ProxTerm::affine(a, Vector::zeros(block_dim))?
        });
    }
    Problem::new(smooth, terms, ProxTerm::zero(dim))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn toy() -> Dataset {
        Dataset::from_dense(&Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]), &v(&[1.0, -1.0, 1.0]))
            .unwrap()
    }

    #[test]
    fn regression_without_constraints() {
        let p = build_constrained_regression(&toy(), 0, 0.1, Labels::Original).unwrap();
        assert_eq!(p.m(), 0);
        assert!((p.smooth().lipschitz() - 4.1).abs() < 1e-15);
        assert!(p.smooth().strong_convexity() > 0.1);
        assert!(build_constrained_regression(&toy(), 3, 0.1, Labels::Original).is_err());
    }

    #[test]
    fn consistent_labels_are_feasible() {
        let p = build_constrained_regression(&toy(), 2, 0.0, Labels::Consistent { seed: 4 }).unwrap();
        assert_eq!(p.m(), 2);
        assert!(crate::solver::reference_solution(&p).is_ok());
    }

    #[test]
    fn svm_labels_checked() {
        assert!(build_svm(&toy(), 1.0).is_ok());
        let bad = toy().with_labels(vec![1.0, 0.0, -1.0]).unwrap();
        assert!(build_svm(&bad, 1.0).is_err());
    }

    #[test]
    fn two_node_consensus_is_diagonal() {
        let quad = |c: f64| SmoothComponent::Quadratic { hessian: Matrix::identity(1, 1), center: v(&[c]) };
        let w = Matrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let p = build_consensus_constraints(&[quad(1.0), quad(3.0)], 1, &w).unwrap();
        let x = p.prox_terms()[0].prox(&v(&[0.0, 4.0]), 1.0).unwrap();
        assert_eq!(x, v(&[2.0, 2.0]));
        let bad = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(build_consensus_constraints(&[quad(1.0), quad(3.0)], 1, &bad).is_err());
    }
}
