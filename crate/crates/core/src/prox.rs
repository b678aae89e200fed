//! Proximal operators: closed forms for the terms used by the problem builders,
//! the reduced-dimension formula for compositions `φ(Aᵀx)`, the Moreau
//! conjugate identity, and a brute-force numerical oracle for tests.
//!
//! Every operator computes `prox_{ηg}(x) = argmin_u g(u) + ‖u − x‖² / (2η)`.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{spectral_norm, sym_eigenvalues, sym_pinv, Matrix, Vector};

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("{name} must be positive and finite, got {v}")))
    }
}

fn require_nonzero(name: &str, a: &Vector) -> Result<f64> {
    let nsq = a.norm_squared();
    if nsq > 0.0 && nsq.is_finite() {
        Ok(nsq)
    } else {
        Err(Error::arg(format!("{name} must be a nonzero finite vector")))
    }
}

/// Scalar soft threshold.
#[inline]
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Soft thresholding: prox of `λ‖·‖₁`.
pub fn prox_l1(x: &Vector, lambda: f64) -> Result<Vector> {
    require_positive("lambda", lambda)?;
    Ok(x.map(|v| soft_threshold(v, lambda)))
}

/// Projection onto the hyperplane `{u : aᵀu = b}`.
pub fn project_hyperplane(x: &Vector, a: &Vector, b: f64) -> Result<Vector> {
    check_dim(x.len(), a.len())?;
    let nsq = require_nonzero("normal vector", a)?;
    let r = (a.dot(x) - b) / nsq;
    let mut out = x.clone();
    out.axpy(-r, a, 1.0);
    Ok(out)
}

/// Affine set `{u : Aᵀu = b}` stored as its minimum-norm point plus an orthonormal basis `U` of
/// `Range(A)`, from the SVD of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    matrix: Matrix,
    offset: Vector,
    basis: Matrix,
    min_norm: Vector,
    rank: usize,
}

impl AffineSet {
    /// `matrix` is `d × k`, `offset` has length `k`.
    pub fn new(matrix: Matrix, offset: Vector) -> Result<Self> {
        check_dim(matrix.ncols(), offset.len())?;
        if matrix.ncols() == 0 {
            return Err(Error::arg("affine set needs at least one constraint column"));
        }
        let d = matrix.nrows();
        let svd = matrix.clone().svd(true, true);
        let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let smax = svd.singular_values.iter().fold(0.0_f64, |a, &v| a.max(v));
        let cutoff = 1e-10 * smax;
        let mut cols = Vec::new();
        let mut min_norm = Vector::zeros(d);
        let mut in_range = Vector::zeros(offset.len());
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > cutoff && s > 0.0 {
                let v = vt.row(i).transpose();
                let coef = v.dot(&offset);
                cols.push(u.column(i).into_owned());
                min_norm.axpy(coef / s, &u.column(i), 1.0);
                in_range.axpy(coef, &v, 1.0);
            }
        }
        let rank = cols.len();
        if rank == 0 {
            return Err(Error::arg("affine set matrix is zero"));
        }
        // b must lie in Range(Aᵀ)
        let resid = (&offset - in_range).norm();
        if resid > 1e-10 * (1.0 + offset.norm()) {
            return Err(Error::Infeasible(format!("inconsistent affine constraints (residual {resid:.3e})")));
        }
        Ok(AffineSet { matrix, offset, basis: Matrix::from_columns(&cols), min_norm, rank })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `Aᵀx − b`
    pub fn residual(&self, x: &Vector) -> Vector {
        self.matrix.tr_mul(x) - &self.offset
    }

    /// `x − A(AᵀA)†(Aᵀx − b)`, evaluated as `x_min + (I − UUᵀ)x`
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.min_norm + x - &self.basis * self.basis.tr_mul(x))
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        let scale = 1.0 + self.offset.norm() + spectral_norm(&self.matrix) * x.norm();
        self.residual(x).norm() <= tol * scale
    }
}

/// Projection onto `{u : Aᵀu = b}` through the pseudoinverse of `AᵀA`.
pub fn project_affine_subspace(x: &Vector, a: &Matrix, b: &Vector) -> Result<Vector> {
    check_dim(x.len(), a.nrows())?;
    let set = AffineSet::new(a.clone(), b.clone())?;
    let u = set.project(x)?;
    let resid = set.residual(&u).norm();
    if resid > 1e-10 * (1.0 + b.norm()) {
        return Err(Error::Infeasible(format!("projection residual {resid:.3e} not reducible")));
    }
    Ok(u)
}

/// Projection onto the slab `{u : |cᵀu − center| ≤ radius}`.
pub fn project_slab(x: &Vector, c: &Vector, center: f64, radius: f64) -> Result<Vector> {
    check_dim(x.len(), c.len())?;
    let nsq = require_nonzero("slab normal", c)?;
    if !(radius >= 0.0) {
        return Err(Error::arg(format!("slab radius must be nonnegative, got {radius}")));
    }
    let s = c.dot(x) - center;
    let excess = if s > radius {
        s - radius
    } else if s < -radius {
        s + radius
    } else {
        return Ok(x.clone());
    };
    let mut out = x.clone();
    out.axpy(-excess / nsq, c, 1.0);
    Ok(out)
}

/// Prox of the hinge `max{0, 1 − b·aᵀx}` with label `b ∈ {−1, +1}`.
pub fn prox_hinge(x: &Vector, a: &Vector, label: f64, eta: f64) -> Result<Vector> {
    check_dim(x.len(), a.len())?;
    let nsq = require_nonzero("feature vector", a)?;
    require_positive("eta", eta)?;
    let step = ((1.0 - label * a.dot(x)) / nsq).clamp(0.0, eta);
    let mut out = x.clone();
    out.axpy(step * label, a, 1.0);
    Ok(out)
}

/// Coordinate subset `G ⊆ {0..d-1}` for group norms `‖x‖_G`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSpec {
    indices: Vec<usize>,
}

impl GroupSpec {
    /// Indices are 0-based, must be unique and below `dim`.
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::arg("group must be nonempty"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg("group indices must be unique"));
        }
        if indices.last().is_some_and(|&i| i >= dim) {
            return Err(Error::arg(format!("group index out of range for dimension {dim}")));
        }
        Ok(GroupSpec { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn norm(&self, x: &Vector) -> f64 {
        self.indices.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()
    }
}

/// Prox of `‖x‖_G`: block shrinkage on the group coordinates.
pub fn prox_group_norm(x: &Vector, group: &GroupSpec, eta: f64) -> Result<Vector> {
    require_positive("eta", eta)?;
    if group.indices.last().is_some_and(|&i| i >= x.len()) {
        return Err(Error::Dimension { expected: group.indices.last().unwrap() + 1, got: x.len() });
    }
    let norm = group.norm(x);
    let scale = if norm > eta { 1.0 - eta / norm } else { 0.0 };
    let mut out = x.clone();
    for &i in &group.indices {
        out[i] *= scale;
    }
    Ok(out)
}

/// Prox of the unsquared distance `‖u − b‖`.
pub fn prox_l2_distance(x: &Vector, b: &Vector, eta: f64) -> Result<Vector> {
    check_dim(x.len(), b.len())?;
    require_positive("eta", eta)?;
    let diff = x - b;
    let norm = diff.norm();
    if norm <= eta {
        return Ok(b.clone());
    }
    Ok(b + diff * (1.0 - eta / norm))
}

/// Scalar prox evaluators `(z, λ) ↦ prox_{λφ}(z)` for common one-dimensional `φ`.
pub mod scalar {
    /// `φ = |·|`
    pub fn abs(z: f64, lambda: f64) -> f64 {
        super::soft_threshold(z, lambda)
    }

    /// `φ ≡ 0`
    pub fn zero(z: f64, _lambda: f64) -> f64 {
        z
    }

    /// `φ = ind{· = target}`
    pub fn point(target: f64) -> impl Fn(f64, f64) -> f64 {
        move |_z, _lambda| target
    }

    /// `φ(z) = (w/2)(z − target)²`
    pub fn square(weight: f64, target: f64) -> impl Fn(f64, f64) -> f64 {
        move |z, lambda| (z + lambda * weight * target) / (1.0 + lambda * weight)
    }
}

/// Prox of `g(x) = φ(aᵀx)` given the exact scalar prox of `φ`.
pub fn prox_rank1_composition<F>(x: &Vector, a: &Vector, phi_prox: F, eta: f64) -> Result<Vector>
where
    F: Fn(f64, f64) -> f64,
{
    check_dim(x.len(), a.len())?;
    let nsq = require_nonzero("composition vector", a)?;
    require_positive("eta", eta)?;
    let s = a.dot(x);
    let theta = phi_prox(s, eta * nsq);
    let mut out = x.clone();
    out.axpy((theta - s) / nsq, a, 1.0);
    Ok(out)
}

/// `φ(z) = left·z` for `z ≤ 0`, `right·z` otherwise, with `left < right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseLinearPhi {
    left: f64,
    right: f64,
}

impl PiecewiseLinearPhi {
    pub fn new(left: f64, right: f64) -> Result<Self> {
        if left < right && left.is_finite() && right.is_finite() {
            Ok(PiecewiseLinearPhi { left, right })
        } else {
            Err(Error::arg(format!("piecewise-linear slopes need left < right, got ({left}, {right})")))
        }
    }

    /// `λ|·|`
    pub fn abs(lambda: f64) -> Result<Self> {
        Self::new(-lambda, lambda)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn value(&self, z: f64) -> f64 {
        if z <= 0.0 {
            self.left * z
        } else {
            self.right * z
        }
    }

    pub fn prox(&self, z: f64, lambda: f64) -> f64 {
        if z <= lambda * self.left {
            z - lambda * self.left
        } else if z <= lambda * self.right {
            0.0
        } else {
            z - lambda * self.right
        }
    }
}

/// Three-branch closed form for the prox of `φ(aᵀx)` with piecewise-linear `φ`.
pub fn prox_piecewise_linear_composition(
    x: &Vector,
    a: &Vector,
    phi: &PiecewiseLinearPhi,
    eta: f64,
) -> Result<Vector> {
    check_dim(x.len(), a.len())?;
    let nsq = require_nonzero("composition vector", a)?;
    require_positive("eta", eta)?;
    let s = a.dot(x);
    let mut out = x.clone();
    if s <= eta * nsq * phi.left {
        out.axpy(-eta * phi.left, a, 1.0);
    } else if s <= eta * nsq * phi.right {
        out.axpy(-s / nsq, a, 1.0);
    } else {
        out.axpy(-eta * phi.right, a, 1.0);
    }
    Ok(out)
}

/// Full-column-rank linear map `A` (`d × k`) with `(AᵀA)⁻¹` precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: Matrix,
    gram_inv: Matrix,
    // A(AᵀA)⁻¹ = UΣ⁻¹Vᵀ
    correction: Matrix,
    // orthonormal basis U of Range(A)
    basis: Matrix,
    // extreme eigenvalues of (AᵀA)⁻¹
    metric_min: f64,
    metric_max: f64,
}

impl LinearMap {
    pub fn new(matrix: Matrix) -> Result<Self> {
        let k = matrix.ncols();
        if k == 0 {
            return Err(Error::arg("linear map needs at least one column"));
        }
        let gram = matrix.transpose() * &matrix;
        let norm_sq = sym_eigenvalues(&gram).last().copied().unwrap_or(0.0);
        let (gram_inv, rank) = sym_pinv(&gram, 1e-10);
        if rank < k || norm_sq <= 0.0 {
            return Err(Error::arg(format!(
                "composition matrix must have full column rank ({rank} < {k})"
            )));
        }
        let ev = sym_eigenvalues(&gram_inv);
        let correction = matrix.clone().pseudo_inverse(0.0).map_err(Error::arg)?.transpose();
        let basis = matrix.clone().svd(true, false).u.expect("requested");
        Ok(LinearMap { matrix, gram_inv, correction, basis, metric_min: ev[0], metric_max: ev[k - 1] })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn inner_dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Projection onto `{u : Aᵀu = target}` as `A(AᵀA)⁻¹target + (I − UUᵀ)x`.
    pub fn project(&self, x: &Vector, target: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.inner_dim(), target.len())?;
        Ok(&self.correction * target + x - &self.basis * self.basis.tr_mul(x))
    }

    /// Minimizes `φ(θ) + ‖θ − s‖²_M / (2η)` with `M = (AᵀA)⁻¹` by accelerated
    /// proximal gradient, given the Euclidean prox of `φ`.
    pub fn metric_prox<F>(&self, s: &Vector, phi_prox: F, eta: f64) -> Result<Vector>
    where
        F: Fn(&Vector, f64) -> Vector,
    {
        let alpha = eta / self.metric_max;
        let kappa = self.metric_max / self.metric_min;
        let momentum = (kappa.sqrt() - 1.0) / (kappa.sqrt() + 1.0);
        let step = |from: &Vector| {
            let grad = &self.gram_inv * (from - s) / eta;
            phi_prox(&(from - grad * alpha), alpha)
        };
        let mut theta = phi_prox(s, alpha);
        let mut prev = theta.clone();
        for _ in 0..200_000 {
            let look = &theta + (&theta - &prev) * momentum;
            let next = step(&look);
            let change = (&next - &theta).norm();
            prev = std::mem::replace(&mut theta, next);
            let tol = 1e-14 * (1.0 + theta.norm());
            if change <= tol {
                // a stalled look-ahead step is not a fixed point; confirm with a plain step
                if (step(&theta) - &theta).norm() <= tol {
                    return Ok(theta);
                }
                prev = theta.clone();
            }
        }
        Err(Error::Oracle("metric prox inner solve did not converge".into()))
    }
}

/// Prox of `g(x) = φ(Aᵀx)` via the `k`-dimensional reduced problem:
/// `x + A(AᵀA)⁻¹(θ* − Aᵀx)` with `θ*` the metric prox of `φ` at `Aᵀx`.
pub fn prox_composition_general<F>(x: &Vector, map: &LinearMap, phi_prox: F, eta: f64) -> Result<Vector>
where
    F: Fn(&Vector, f64) -> Vector,
{
    check_dim(map.dim(), x.len())?;
    require_positive("eta", eta)?;
    let s = map.matrix.tr_mul(x);
    let theta = if map.inner_dim() == 1 {
        // exact: the metric is the scalar 1/‖a‖²
        phi_prox(&s, eta / map.metric_max)
    } else {
        map.metric_prox(&s, phi_prox, eta)?
    };
    Ok(x + &map.correction * (theta - s))
}

/// Largest inner dimension for which [`prox_l1_composition`] enumerates active sets.
pub const L1_COMPOSITION_MAX_K: usize = 8;

/// Prox of `w‖Aᵀx‖₁` as `x − ηAg*`, `g* = argmin_{‖g‖∞ ≤ w} ½‖Ag − x/η‖²`, by enumerating which
/// coordinates of `g` sit at `±w`. The returned point is `η` times a least-squares residual, so it
/// stays accurate when `A` is badly conditioned and `g*` is not.
pub fn prox_l1_composition(x: &Vector, a: &Matrix, weight: f64, eta: f64) -> Result<Vector> {
    check_dim(a.nrows(), x.len())?;
    require_positive("eta", eta)?;
    require_positive("weight", weight)?;
    let k = a.ncols();
    if k > L1_COMPOSITION_MAX_K {
        return Err(Error::arg(format!("active-set enumeration supports k ≤ {L1_COMPOSITION_MAX_K}, got {k}")));
    }
    let c = x / eta;
    let col_norms: Vec<f64> = (0..k).map(|i| a.column(i).norm()).collect();
    let scale = c.norm() + weight * col_norms.iter().sum::<f64>();
    let mut best: Option<(f64, Vector)> = None;
    for code in 0..3usize.pow(k as u32) {
        let mut pattern = vec![0i8; k];
        let mut rest = code;
        for p in pattern.iter_mut() {
            *p = (rest % 3) as i8 - 1;
            rest /= 3;
        }
        let free: Vec<usize> = (0..k).filter(|&i| pattern[i] == 0).collect();
        let mut target = c.clone();
        for (i, &s) in pattern.iter().enumerate() {
            if s != 0 {
                target.axpy(-(s as f64) * weight, &a.column(i), 1.0);
            }
        }
        let (g_free, r) = if free.is_empty() {
            (Vector::zeros(0), target)
        } else {
            let af = a.select_columns(&free);
            let g = crate::linalg::lstsq(&af, &target)?;
            let r = &target - &af * &g;
            (g, r)
        };
        let corr = a.tr_mul(&r);
        let mut viol = 0.0_f64;
        for (n, &i) in free.iter().enumerate() {
            viol = viol.max((g_free[n].abs() - weight) * col_norms[i] / scale.max(f64::MIN_POSITIVE));
        }
        for i in 0..k {
            if pattern[i] != 0 {
                viol = viol.max(-(pattern[i] as f64) * corr[i] / (col_norms[i] * scale).max(f64::MIN_POSITIVE));
            }
        }
        if best.as_ref().is_none_or(|(v, _)| viol < *v) {
            best = Some((viol, r));
        }
    }
    let (_, r) = best.expect("at least one pattern");
    Ok(r * eta)
}

/// Prox of the conjugate via Moreau's identity:
/// `prox_{σg*}(x) = x − σ·prox_{g/σ}(x/σ)`, where `base_prox(v, λ) = prox_{λg}(v)`.
pub fn moreau_conjugate_prox<F>(x: &Vector, base_prox: F, sigma: f64) -> Result<Vector>
where
    F: Fn(&Vector, f64) -> Vector,
{
    require_positive("sigma", sigma)?;
    let inner = base_prox(&(x / sigma), 1.0 / sigma);
    check_dim(x.len(), inner.len())?;
    Ok(x - inner * sigma)
}

/// Numerical prox for finite-valued convex `g` in dimension ≤ 5.
///
/// Minimizes `g(u) + ‖u − x‖²/(2η)` by nested golden-section search: the
/// partial minimum over trailing coordinates of a jointly convex function is
/// convex in the leading one, so each level is a 1-D convex search with an
/// expanding bracket. Used only as ground truth in tests.
pub fn brute_force_prox(x: &Vector, g: &dyn Fn(&Vector) -> f64, eta: f64, tol: f64) -> Result<Vector> {
    require_positive("eta", eta)?;
    require_positive("tol", tol)?;
    let d = x.len();
    if d == 0 || d > 5 {
        return Err(Error::arg(format!("brute-force prox supports 1 ≤ d ≤ 5, got {d}")));
    }
    let objective = |u: &Vector| g(u) + (u - x).norm_squared() / (2.0 * eta);
    if !objective(x).is_finite() {
        return Err(Error::Oracle("objective is not finite at the starting point".into()));
    }
    let mut u = x.clone();
    let search = NestedSearch { objective: &objective, center: x, tol };
    search.minimize_from(&mut u, 0)?;
    Ok(u)
}

struct NestedSearch<'a> {
    objective: &'a dyn Fn(&Vector) -> f64,
    center: &'a Vector,
    tol: f64,
}

impl NestedSearch<'_> {
    /// Minimizes over coordinates `level..` with the earlier ones fixed; leaves
    /// `u` at the minimizer and returns the minimum.
    fn minimize_from(&self, u: &mut Vector, level: usize) -> Result<f64> {
        if level == u.len() {
            return Ok((self.objective)(u));
        }
        let mut h = |t: f64, u: &mut Vector| -> Result<f64> {
            u[level] = t;
            self.minimize_from(u, level + 1)
        };
        let c = self.center[level];
        let (lo, hi) = self.bracket(c, u, &mut h)?;
        let best = golden_section(lo, hi, self.tol, |t| h(t, u))?;
        u[level] = best;
        self.minimize_from(u, level + 1)
    }

    fn bracket(
        &self,
        c: f64,
        u: &mut Vector,
        h: &mut dyn FnMut(f64, &mut Vector) -> Result<f64>,
    ) -> Result<(f64, f64)> {
        let mut step = 1.0 + c.abs();
        let fc = h(c, u)?;
        let fr = h(c + step, u)?;
        let fl = h(c - step, u)?;
        if fr >= fc && fl >= fc {
            return Ok((c - step, c + step));
        }
        let dir = if fr < fl { 1.0 } else { -1.0 };
        let (mut prev, mut cur, mut fcur) = (c, c + dir * step, fr.min(fl));
        loop {
            step *= 2.0;
            if step > 1e12 {
                return Err(Error::Oracle("bracket expansion diverged".into()));
            }
            let next = cur + dir * step;
            let fnext = h(next, u)?;
            if fnext >= fcur {
                return Ok(if prev < next { (prev, next) } else { (next, prev) });
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    }
}

fn golden_section<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iters = 0;
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        iters += 1;
        if iters > 400 {
            return Err(Error::Oracle("golden-section search did not converge".into()));
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { x1 } else { x2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn l1_examples() {
        assert_eq!(prox_l1(&v(&[0.0, 0.0]), 1.0).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(prox_l1(&v(&[3.0]), 1.0).unwrap(), v(&[2.0]));
        assert_eq!(prox_l1(&v(&[-0.5]), 1.0).unwrap(), v(&[0.0]));
        assert!(prox_l1(&v(&[1.0]), 0.0).is_err());
        assert!(prox_l1(&v(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn hyperplane_examples() {
        let a = v(&[3.0, 4.0]);
        assert_eq!(project_hyperplane(&v(&[2.0, 1.0]), &a, 10.0).unwrap(), v(&[2.0, 1.0]));
        assert_eq!(project_hyperplane(&v(&[5.0, 7.0]), &v(&[1.0, 0.0]), 0.0).unwrap(), v(&[0.0, 7.0]));
        let u = project_hyperplane(&v(&[0.0, 0.0]), &a, 10.0).unwrap();
        assert!(close(&u, &v(&[1.2, 1.6]), 1e-15));
        assert!(project_hyperplane(&v(&[1.0, 1.0]), &v(&[0.0, 0.0]), 1.0).is_err());
    }

    #[test]
    fn affine_pins_coordinates() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let u = project_affine_subspace(&v(&[0.0, 0.0, 5.0]), &a, &v(&[1.0, 2.0])).unwrap();
        assert!(close(&u, &v(&[1.0, 2.0, 5.0]), 1e-14));
    }

    #[test]
    fn affine_rank_one_matches_hyperplane() {
        let a = v(&[3.0, -1.0, 2.0]);
        let x = v(&[0.3, 0.7, -1.1]);
        let u1 = project_affine_subspace(&x, &Matrix::from_columns(std::slice::from_ref(&a)), &v(&[2.5])).unwrap();
        let u2 = project_hyperplane(&x, &a, 2.5).unwrap();
        assert!(close(&u1, &u2, 1e-14));
    }

    #[test]
    fn affine_inconsistent_is_infeasible() {
        // two copies of the same column with different right-hand sides
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let err = project_affine_subspace(&v(&[0.0, 0.0]), &a, &v(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }

    #[test]
    fn affine_redundant_consistent_ok() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0]);
        let u = project_affine_subspace(&v(&[0.0, 3.0]), &a, &v(&[1.0, 2.0])).unwrap();
        assert!(close(&u, &v(&[1.0, 3.0]), 1e-12));
    }

    #[test]
    fn slab_examples() {
        let c = v(&[1.0, 0.0]);
        assert_eq!(project_slab(&v(&[0.5, 2.0]), &c, 0.0, 1.0).unwrap(), v(&[0.5, 2.0]));
        assert_eq!(project_slab(&v(&[3.0, 2.0]), &c, 0.0, 1.0).unwrap(), v(&[1.0, 2.0]));
        assert_eq!(project_slab(&v(&[-3.0, 2.0]), &c, 0.0, 1.0).unwrap(), v(&[-1.0, 2.0]));
        let x = v(&[0.4, -2.0]);
        let a = v(&[2.0, 1.0]);
        assert!(close(&project_slab(&x, &a, 0.3, 0.0).unwrap(), &project_hyperplane(&x, &a, 0.3).unwrap(), 1e-15));
        assert!(project_slab(&x, &v(&[0.0, 0.0]), 0.0, 1.0).is_err());
    }

    #[test]
    fn hinge_examples() {
        let a = v(&[1.0, 0.0]);
        assert_eq!(prox_hinge(&v(&[2.0, 0.0]), &a, 1.0, 1.0).unwrap(), v(&[2.0, 0.0]));
        assert_eq!(prox_hinge(&v(&[0.0, 0.0]), &a, 1.0, 1.0).unwrap(), v(&[1.0, 0.0]));
        assert_eq!(prox_hinge(&v(&[0.5, 0.0]), &a, 1.0, 10.0).unwrap(), v(&[1.0, 0.0]));
        assert!(prox_hinge(&v(&[0.5, 0.0]), &v(&[0.0, 0.0]), 1.0, 1.0).is_err());
    }

    #[test]
    fn group_examples() {
        let g = GroupSpec::new(vec![0, 1], 3).unwrap();
        let u = prox_group_norm(&v(&[3.0, 4.0, 7.0]), &g, 1.0).unwrap();
        assert!(close(&u, &v(&[2.4, 3.2, 7.0]), 1e-15));
        let u = prox_group_norm(&v(&[0.3, 0.4, 7.0]), &g, 1.0).unwrap();
        assert_eq!(u, v(&[0.0, 0.0, 7.0]));
        let x = v(&[3.0, 4.0, 7.0]);
        assert!(close(&prox_group_norm(&x, &g, 1e-12).unwrap(), &x, 1e-11));
        assert!(GroupSpec::new(vec![0, 0], 3).is_err());
        assert!(GroupSpec::new(vec![3], 3).is_err());
    }

    #[test]
    fn distance_examples() {
        let b = v(&[1.0, -1.0]);
        assert_eq!(prox_l2_distance(&b, &b, 1.0).unwrap(), b);
        assert_eq!(prox_l2_distance(&v(&[1.5, -1.0]), &b, 1.0).unwrap(), b);
        let u = prox_l2_distance(&v(&[3.0, 4.0]), &v(&[0.0, 0.0]), 1.0).unwrap();
        assert!(close(&u, &v(&[2.4, 3.2]), 1e-15));
    }

    #[test]
    fn rank1_examples() {
        let u = prox_rank1_composition(&v(&[3.0, 1.0]), &v(&[2.0, 0.0]), scalar::abs, 1.0).unwrap();
        assert!(close(&u, &v(&[1.0, 1.0]), 1e-15));
        let x = v(&[0.3, -2.0]);
        assert_eq!(prox_rank1_composition(&x, &v(&[1.0, 1.0]), scalar::zero, 1.0).unwrap(), x);
        let a = v(&[1.0, 2.0]);
        let u = prox_rank1_composition(&x, &a, scalar::point(4.0), 1.0).unwrap();
        assert!(close(&u, &project_hyperplane(&x, &a, 4.0).unwrap(), 1e-14));
    }

    #[test]
    fn piecewise_examples() {
        let phi = PiecewiseLinearPhi::new(-1.0, 1.0).unwrap();
        let a = v(&[1.0, 0.0]);
        assert_eq!(prox_piecewise_linear_composition(&v(&[5.0, 0.0]), &a, &phi, 1.0).unwrap(), v(&[4.0, 0.0]));
        let u = prox_piecewise_linear_composition(&v(&[0.5, 3.0]), &a, &phi, 1.0).unwrap();
        assert_eq!(u, v(&[0.0, 3.0]));
        assert!(PiecewiseLinearPhi::new(1.0, 1.0).is_err());
        // consistency with the rank-one formula for λ|·|
        let a = v(&[0.7, -1.3]);
        let phi = PiecewiseLinearPhi::abs(0.8).unwrap();
        for x in [v(&[2.0, 1.0]), v(&[0.1, 0.05]), v(&[-3.0, 2.0])] {
            let p1 = prox_piecewise_linear_composition(&x, &a, &phi, 0.6).unwrap();
            let p2 = prox_rank1_composition(&x, &a, |z, l| soft_threshold(z, 0.8 * l), 0.6).unwrap();
            assert!(close(&p1, &p2, 1e-14));
        }
    }

    #[test]
    fn general_composition_specializations() {
        let a = v(&[1.0, -2.0, 0.5]);
        let x = v(&[0.2, 0.9, -1.4]);
        let map = LinearMap::new(Matrix::from_columns(std::slice::from_ref(&a))).unwrap();
        let p1 = prox_composition_general(&x, &map, |s, l| s.map(|z| soft_threshold(z, l)), 0.7).unwrap();
        let p2 = prox_rank1_composition(&x, &a, scalar::abs, 0.7).unwrap();
        assert!(close(&p1, &p2, 1e-14));

        let m = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let b = v(&[0.5, -1.0]);
        let map = LinearMap::new(m.clone()).unwrap();
        let p = prox_composition_general(&x, &map, |_s, _l| b.clone(), 0.7).unwrap();
        assert!(close(&p, &project_affine_subspace(&x, &m, &b).unwrap(), 1e-12));

        let rank_def = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        assert!(LinearMap::new(rank_def).is_err());
    }

    #[test]
    fn moreau_examples() {
        let abs_prox = |v: &Vector, l: f64| v.map(|z| soft_threshold(z, l));
        let u = moreau_conjugate_prox(&v(&[3.0]), abs_prox, 1.0).unwrap();
        assert!(close(&u, &v(&[1.0]), 1e-15));
        let u = moreau_conjugate_prox(&v(&[3.0, -2.0]), |v: &Vector, _l| v.clone(), 0.5).unwrap();
        assert_eq!(u, v(&[0.0, 0.0]));
        // decomposition x = prox_{σg*}(x) + σ prox_{g/σ}(x/σ)
        let x = v(&[0.4, -2.5, 1.1]);
        let sigma = 2.0;
        let conj = moreau_conjugate_prox(&x, abs_prox, sigma).unwrap();
        let primal = abs_prox(&(&x / sigma), 1.0 / sigma) * sigma;
        assert!(close(&(conj + primal), &x, 1e-15));
    }

    #[test]
    fn brute_force_basic() {
        let x = v(&[0.3, -1.2]);
        let u = brute_force_prox(&x, &|_u| 0.0, 1.0, 1e-10).unwrap();
        assert!(close(&u, &x, 1e-8));
        let l1 = |u: &Vector| u.iter().map(|z| z.abs()).sum::<f64>();
        let u = brute_force_prox(&v(&[3.0]), &l1, 1.0, 1e-10).unwrap();
        assert!(close(&u, &v(&[2.0]), 1e-7));
        let u = brute_force_prox(&v(&[-0.5]), &l1, 1.0, 1e-10).unwrap();
        assert!(close(&u, &v(&[0.0]), 1e-7));
        let inf = |_u: &Vector| f64::INFINITY;
        assert!(matches!(brute_force_prox(&x, &inf, 1.0, 1e-8), Err(Error::Oracle(_))));
    }
}
