use crate::error::{Error, Result};
use crate::estimators::{EstimatorConstants, EstimatorKind};
use crate::linalg::{lstsq, Matrix, Vector};
use crate::problem::{eval_objective, Problem, ProxKind};
use crate::prox::AffineSet;
use crate::state::{SolverState, StepConfig};

use super::{fixed_point_residuals, Solver};

/// A solution `x*` with duals `y₁*, …, y_m*` satisfying the optimality fixed points.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub x: Vector,
    pub y: Vec<Vector>,
    pub objective: f64,
}

impl Reference {
    pub fn y_bar(&self) -> Vector {
        let mut acc = Vector::zeros(self.x.len());
        if self.y.is_empty() {
            return acc;
        }
        for y in &self.y {
            acc += y;
        }
        acc / self.y.len() as f64
    }

    /// Solver state sitting at `(x*, y*)`.
    pub fn to_state(&self) -> SolverState {
        SolverState::with_duals(self.x.clone(), self.y.clone()).expect("reference duals have dimension d")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptions {
    pub allow_fallback: bool,
    pub max_iters: u64,
    /// Fallback stops once the step residual stays below this for `m + 1` steps and the
    /// fixed-point identities hold to `100·tol`.
    pub tol: f64,
    pub seed: u64,
    /// Fallback stepsize; defaults to the full-gradient `η₀` (or 1 when that is infinite).
    pub eta: Option<f64>,
    /// Required accuracy of the fixed-point identities.
    pub check_tol: f64,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            allow_fallback: true,
            max_iters: 1_000_000,
            tol: 1e-14,
            seed: 0x5eed,
            eta: None,
            check_tol: 1e-8,
        }
    }
}

pub fn reference_solution(problem: &Problem) -> Result<Reference> {
    reference_solution_with(problem, &ReferenceOptions::default())
}

pub fn reference_solution_with(problem: &Problem, opts: &ReferenceOptions) -> Result<Reference> {
    match kkt_reference(problem)? {
        Some(r) => Ok(r),
        None if opts.allow_fallback => fallback_reference(problem, opts),
        None => Err(Error::arg("problem is outside the closed-form family and fallback is disabled")),
    }
}

struct QuadraticModel {
    h: Matrix,
    c: Vector,
    a: Matrix,
    b: Vector,
    /// Column range of each affine term inside `a`.
    blocks: Vec<Option<(usize, usize)>>,
    l1: Option<f64>,
}

fn quadratic_model(problem: &Problem) -> Result<Option<QuadraticModel>> {
    let d = problem.dim();
    let Some((mut h, mut c)) = problem.smooth().as_quadratic() else {
        return Ok(None);
    };
    let l1 = match problem.regularizer().kind() {
        ProxKind::Zero => None,
        ProxKind::L1 { weight } => Some(*weight),
        _ => return Ok(None),
    };
    let m = problem.m() as f64;
    let mut sets: Vec<AffineSet> = Vec::new();
    let mut blocks = Vec::with_capacity(problem.m());
    let mut col = 0;
    for g in problem.prox_terms() {
        match g.kind() {
            ProxKind::Zero => blocks.push(None),
            ProxKind::QuadraticRow { normal, target, weight } => {
                h += normal * normal.transpose() * (weight / m);
                c += normal * (weight * target / m);
                blocks.push(None);
            }
            ProxKind::SquaredDistance { center, weight } => {
                h += Matrix::identity(d, d) * (weight / m);
                c += center * (weight / m);
                blocks.push(None);
            }
            _ => match g.affine_constraint() {
                Some(set) => {
                    let k = set.matrix().ncols();
                    blocks.push(Some((col, k)));
                    col += k;
                    sets.push(set);
                }
                None => return Ok(None),
            },
        }
    }
    let mut a = Matrix::zeros(d, col);
    let mut b = Vector::zeros(col);
    let mut k = 0;
    for s in &sets {
        let w = s.matrix().ncols();
        a.columns_mut(k, w).copy_from(s.matrix());
        b.rows_mut(k, w).copy_from(s.offset());
        k += w;
    }
    if col > 0 {
        // rejects inconsistent systems
        AffineSet::new(a.clone(), b.clone())?;
    }
    Ok(Some(QuadraticModel { h, c, a, b, blocks, l1 }))
}

/// Solve `Hx − c + Aλ + Eν = 0`, `Aᵀx = b`, `Eᵀx = 0`; returns `(x, λ)`.
fn solve_kkt(model: &QuadraticModel, c: &Vector, zero_coords: &[usize]) -> Result<(Vector, Vector)> {
    let d = model.h.nrows();
    let k = model.a.ncols();
    let e = zero_coords.len();
    let n = d + k + e;
    let mut kkt = Matrix::zeros(n, n);
    kkt.view_mut((0, 0), (d, d)).copy_from(&model.h);
    if k > 0 {
        kkt.view_mut((0, d), (d, k)).copy_from(&model.a);
        kkt.view_mut((d, 0), (k, d)).copy_from(&model.a.transpose());
    }
    for (r, &i) in zero_coords.iter().enumerate() {
        kkt[(i, d + k + r)] = 1.0;
        kkt[(d + k + r, i)] = 1.0;
    }
    let mut rhs = Vector::zeros(n);
    rhs.rows_mut(0, d).copy_from(c);
    if k > 0 {
        rhs.rows_mut(d, k).copy_from(&model.b);
    }
    let sol = lstsq(&kkt, &rhs)?;
    let resid = (&kkt * &sol - &rhs).norm();
    let scale = 1.0 + rhs.norm() + kkt.norm() * sol.norm();
    if resid > 1e-9 * scale {
        return Err(Error::Infeasible(format!("KKT system has no solution (residual {resid:.3e})")));
    }
    Ok((sol.rows(0, d).into_owned(), sol.rows(d, k).into_owned()))
}

fn duals_from_model(problem: &Problem, model: &QuadraticModel, x: &Vector, lambda: &Vector) -> Vec<Vector> {
    let m = problem.m() as f64;
    problem
        .prox_terms()
        .iter()
        .zip(&model.blocks)
        .map(|(g, blk)| match blk {
            Some((start, k)) => model.a.columns(*start, *k) * lambda.rows(*start, *k) * m,
            None => g.gradient(x).unwrap_or_else(|| Vector::zeros(x.len())),
        })
        .collect()
}

fn kkt_reference(problem: &Problem) -> Result<Option<Reference>> {
    let Some(model) = quadratic_model(problem)? else {
        return Ok(None);
    };
    let (x, lambda) = match model.l1 {
        None => solve_kkt(&model, &model.c, &[])?,
        Some(w) => match l1_active_set(problem, &model, w)? {
            Some(sol) => sol,
            None => return Ok(None),
        },
    };
    let y = duals_from_model(problem, &model, &x, &lambda);
    let objective = eval_objective(problem, &x)?;
    Ok(Some(Reference { x, y, objective }))
}

/// Polish an approximate solution by solving the KKT system on its support and sign pattern.
fn l1_active_set(problem: &Problem, model: &QuadraticModel, w: f64) -> Result<Option<(Vector, Vector)>> {
    let opts = ReferenceOptions { max_iters: 200_000, tol: 1e-12, check_tol: f64::INFINITY, ..Default::default() };
    let approx = fallback_reference(problem, &opts)?;
    let d = problem.dim();
    let scale = approx.x.amax().max(1.0);
    for thresh in [1e-9, 1e-7, 1e-5, 1e-11] {
        let signs: Vec<f64> = approx
            .x
            .iter()
            .map(|&v| if v.abs() <= thresh * scale { 0.0 } else { v.signum() })
            .collect();
        let zeros: Vec<usize> = (0..d).filter(|&i| signs[i] == 0.0).collect();
        let c = &model.c - Vector::from_vec(signs.clone()) * w;
        let Ok((x, lambda)) = solve_kkt(model, &c, &zeros) else {
            continue;
        };
        let r = -(&model.h * &x - &model.c + &model.a * &lambda);
        let ok = (0..d).all(|i| {
            if signs[i] == 0.0 {
                r[i].abs() <= w * (1.0 + 1e-9)
            } else {
                x[i] * signs[i] >= 0.0
            }
        });
        if ok {
            return Ok(Some((x, lambda)));
        }
    }
    Ok(None)
}

/// Fixed-point identities at the current iterate, with the solver's own stepsizes.
fn settled(problem: &Problem, solver: &Solver<'_>, eta: f64, tol: f64) -> Result<bool> {
    let state = solver.state();
    let here = Reference { x: state.x.clone(), y: state.y.clone(), objective: 0.0 };
    let m = problem.m().max(1) as f64;
    let p_min = solver.probabilities().iter().copied().fold(1.0, f64::min);
    let (rr, rg) = fixed_point_residuals(problem, &here, eta, eta / (m * p_min))?;
    Ok(rr.max(rg) <= 100.0 * tol)
}

fn fallback_reference(problem: &Problem, opts: &ReferenceOptions) -> Result<Reference> {
    let smooth = problem.smooth();
    let kind = if smooth.is_zero() { EstimatorKind::Zero } else { EstimatorKind::Full };
    let constants = EstimatorConstants::for_smooth(kind, smooth);
    let eta = opts.eta.unwrap_or(if constants.eta0.is_finite() { constants.eta0 } else { 1.0 });
    let mut cfg = StepConfig::constant(eta).with_seed(opts.seed).with_max_iters(opts.max_iters);
    cfg.allow_large_step = true;
    let mut solver = Solver::new(problem, cfg, kind)?;
    let needed = problem.m() as u64 + 1;
    let mut quiet = 0;
    for _ in 0..opts.max_iters {
        let out = solver.step_once()?;
        let scale = 1.0 + solver.state().x.norm();
        if out.residual <= opts.tol * scale {
            quiet += 1;
            // a quiet streak can come from terms whose prox is locally the identity
            if quiet >= needed {
                if settled(problem, &solver, eta, opts.tol * scale)? {
                    break;
                }
                quiet = 0;
            }
        } else {
            quiet = 0;
        }
    }
    let mut state = solver.into_state();
    state.refresh_dual();
    let objective = eval_objective(problem, &state.x)?;
    let reference = Reference { x: state.x, y: state.y, objective };
    if opts.check_tol.is_finite() {
        let eta_j = eta / problem.m().max(1) as f64;
        let (rr, rg) = fixed_point_residuals(problem, &reference, eta, eta_j)?;
        if rr.max(rg) > opts.check_tol {
            return Err(Error::Oracle(format!(
                "fallback reference did not converge (fixed-point residuals {rr:.3e}, {rg:.3e})"
            )));
        }
    }
    Ok(reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ProxTerm, SmoothTerm};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn minimum_norm_point() {
        let p = Problem::new(
            SmoothTerm::half_squared_distance(Vector::zeros(3)),
            vec![ProxTerm::hyperplane(v(&[1.0, 0.0, 0.0]), 1.0).unwrap()],
            ProxTerm::zero(3),
        )
        .unwrap();
        let r = reference_solution(&p).unwrap();
        assert!((r.x - v(&[1.0, 0.0, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn infeasible_constraints_rejected() {
        let p = Problem::new(
            SmoothTerm::half_squared_distance(Vector::zeros(2)),
            vec![
                ProxTerm::hyperplane(v(&[1.0, 0.0]), 1.0).unwrap(),
                ProxTerm::hyperplane(v(&[2.0, 0.0]), 1.0).unwrap(),
            ],
            ProxTerm::zero(2),
        )
        .unwrap();
        assert!(matches!(reference_solution(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn l1_polish_satisfies_fixed_points() {
        let p = Problem::new(
            SmoothTerm::half_squared_distance(v(&[2.0, 0.3, -1.5])),
            vec![ProxTerm::hyperplane(v(&[1.0, 1.0, 1.0]), 1.0).unwrap()],
            ProxTerm::l1(3, 0.5).unwrap(),
        )
        .unwrap();
        let r = reference_solution(&p).unwrap();
        for eta in [0.1, 1.0, 10.0] {
            let (a, b) = fixed_point_residuals(&p, &r, eta, eta).unwrap();
            assert!(a < 1e-10 && b < 1e-10, "{a} {b}");
        }
    }
}
