//! Problem model: `F(x) = f(x) + (1/m) Σⱼ gⱼ(x) + R(x)`.

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{spectral_norm, sym_eigenvalues, Matrix, Row, Vector};
use crate::prox::{self, AffineSet, GroupSpec, LinearMap, PiecewiseLinearPhi};

/// Relative feasibility tolerance used when evaluating indicator terms.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// One differentiable convex component `fᵢ` of the smooth term.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothComponent {
    Zero,
    /// `½ (x − c)ᵀ H (x − c)`
    Quadratic { hessian: Matrix, center: Vector },
    /// `½ (aᵀx − b)² + (ridge/2) ‖x‖²`
    LeastSquares { row: Row, target: f64, ridge: f64 },
    /// `log(1 + exp(−b aᵀx)) + (ridge/2) ‖x‖²`
    Logistic { row: Row, label: f64, ridge: f64 },
}

impl SmoothComponent {
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            SmoothComponent::Zero => 0.0,
            SmoothComponent::Quadratic { hessian, center } => {
                let diff = x - center;
                0.5 * diff.dot(&(hessian * &diff))
            }
            SmoothComponent::LeastSquares { row, target, ridge } => {
                let r = row.dot(x) - target;
                0.5 * r * r + 0.5 * ridge * x.norm_squared()
            }
            SmoothComponent::Logistic { row, label, ridge } => {
                let s = -label * row.dot(x);
                softplus(s) + 0.5 * ridge * x.norm_squared()
            }
        }
    }

    /// `out += scale · ∇fᵢ(x)`
    pub fn add_gradient(&self, x: &Vector, scale: f64, out: &mut Vector) {
        match self {
            SmoothComponent::Zero => {}
            SmoothComponent::Quadratic { hessian, center } => {
                out.gemv(scale, hessian, &(x - center), 1.0);
            }
            SmoothComponent::LeastSquares { row, target, ridge } => {
                row.axpy(scale * (row.dot(x) - target), out);
                if *ridge != 0.0 {
                    out.axpy(scale * ridge, x, 1.0);
                }
            }
            SmoothComponent::Logistic { row, label, ridge } => {
                let s = -label * row.dot(x);
                row.axpy(-scale * label * sigmoid(s), out);
                if *ridge != 0.0 {
                    out.axpy(scale * ridge, x, 1.0);
                }
            }
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(x.len());
        self.add_gradient(x, 1.0, &mut g);
        g
    }

    /// Constant Hessian for quadratic-family components.
    pub fn hessian(&self, dim: usize) -> Option<Matrix> {
        match self {
            SmoothComponent::Zero => Some(Matrix::zeros(dim, dim)),
            SmoothComponent::Quadratic { hessian, .. } => Some(hessian.clone()),
            SmoothComponent::LeastSquares { row, ridge, .. } => {
                let a = row.to_dense();
                Some(&a * a.transpose() + Matrix::identity(dim, dim) * *ridge)
            }
            SmoothComponent::Logistic { .. } => None,
        }
    }

    /// Hessian at a point (exact for every variant).
    pub fn hessian_at(&self, x: &Vector) -> Matrix {
        let dim = x.len();
        match self {
            SmoothComponent::Logistic { row, label, ridge } => {
                let s = -label * row.dot(x);
                let w = sigmoid(s) * (1.0 - sigmoid(s));
                let a = row.to_dense();
                &a * a.transpose() * w + Matrix::identity(dim, dim) * *ridge
            }
            other => other.hessian(dim).expect("quadratic component"),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            SmoothComponent::Zero => None,
            SmoothComponent::Quadratic { hessian, center } => {
                (hessian.nrows() == center.len() && hessian.ncols() == center.len()).then_some(center.len())
            }
            SmoothComponent::LeastSquares { row, .. } | SmoothComponent::Logistic { row, .. } => Some(row.dim()),
        }
    }

    /// Upper bound on the curvature of this component.
    pub fn curvature_bound(&self) -> f64 {
        match self {
            SmoothComponent::Zero => 0.0,
            SmoothComponent::Quadratic { hessian, .. } => sym_eigenvalues(hessian).last().copied().unwrap_or(0.0),
            SmoothComponent::LeastSquares { row, ridge, .. } => row.norm_squared() + ridge,
            SmoothComponent::Logistic { row, ridge, .. } => 0.25 * row.norm_squared() + ridge,
        }
    }
}

fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `f = (1/n) Σᵢ fᵢ` with uniform per-component smoothness `L` and strong convexity `μ` of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothTerm {
    dim: usize,
    components: Vec<SmoothComponent>,
    lipschitz: f64,
    strong_convexity: f64,
    expectation_mode: bool,
}

impl SmoothTerm {
    pub fn new(dim: usize, components: Vec<SmoothComponent>, lipschitz: f64, strong_convexity: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::arg("smooth term needs at least one component"));
        }
        if !(strong_convexity >= 0.0 && lipschitz >= strong_convexity && lipschitz.is_finite()) {
            return Err(Error::arg(format!(
                "need L ≥ μ ≥ 0, got L = {lipschitz}, μ = {strong_convexity}"
            )));
        }
        for c in &components {
            if let Some(cd) = c.dim() {
                check_dim(dim, cd)?;
            } else if !matches!(c, SmoothComponent::Zero) {
                return Err(Error::arg("malformed quadratic component"));
            }
        }
        Ok(SmoothTerm { dim, components, lipschitz, strong_convexity, expectation_mode: false })
    }

    /// Quadratic-family constructor with `L = maxᵢ λ_max(Hᵢ)` and `μ = λ_min((1/n)ΣHᵢ)`.
    pub fn quadratic(dim: usize, components: Vec<SmoothComponent>) -> Result<Self> {
        let mut mean = Matrix::zeros(dim, dim);
        let mut lipschitz: f64 = 0.0;
        for c in &components {
            let h = c.hessian(dim).ok_or_else(|| Error::arg("quadratic() needs quadratic components"))?;
            check_dim(dim, h.nrows())?;
            lipschitz = lipschitz.max(sym_eigenvalues(&h).last().copied().unwrap_or(0.0));
            mean += h;
        }
        if components.is_empty() {
            return Err(Error::arg("smooth term needs at least one component"));
        }
        mean /= components.len() as f64;
        let mu = sym_eigenvalues(&mean).first().copied().unwrap_or(0.0).max(0.0);
        // eigen-solver noise can put μ a hair above L for a single isotropic component
        Self::new(dim, components, lipschitz.max(mu), mu.min(lipschitz.max(mu)))
    }

    /// `f(x) = ½‖x − center‖²`
    pub fn half_squared_distance(center: Vector) -> Self {
        let dim = center.len();
        SmoothTerm {
            dim,
            components: vec![SmoothComponent::Quadratic { hessian: Matrix::identity(dim, dim), center }],
            lipschitz: 1.0,
            strong_convexity: 1.0,
            expectation_mode: false,
        }
    }

    /// `f ≡ 0`
    pub fn zero(dim: usize) -> Self {
        SmoothTerm {
            dim,
            components: vec![SmoothComponent::Zero],
            lipschitz: 0.0,
            strong_convexity: 0.0,
            expectation_mode: false,
        }
    }

    pub fn with_expectation_mode(mut self, on: bool) -> Self {
        self.expectation_mode = on;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SmoothComponent] {
        &self.components
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    pub fn expectation_mode(&self) -> bool {
        self.expectation_mode
    }

    pub fn value(&self, x: &Vector) -> f64 {
        self.components.iter().map(|c| c.value(x)).sum::<f64>() / self.n() as f64
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim);
        let w = 1.0 / self.n() as f64;
        for c in &self.components {
            c.add_gradient(x, w, &mut g);
        }
        g
    }

    pub fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        self.components[i].gradient(x)
    }

    /// `(H, c)` with `∇f(x) = Hx − c` when every component is quadratic.
    pub fn as_quadratic(&self) -> Option<(Matrix, Vector)> {
        let mut h = Matrix::zeros(self.dim, self.dim);
        for c in &self.components {
            h += c.hessian(self.dim)?;
        }
        h /= self.n() as f64;
        let c = -self.gradient(&Vector::zeros(self.dim));
        Some((h, c))
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| matches!(c, SmoothComponent::Zero))
    }
}

/// Scalar or vector `φ` used inside `φ(Aᵀx)` compositions.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerFunction {
    Zero,
    /// `w ‖θ‖₁`
    L1 { weight: f64 },
    /// `ind{θ = target}`
    Point { target: Vector },
}

impl InnerFunction {
    pub fn value(&self, theta: &Vector) -> f64 {
        match self {
            InnerFunction::Zero => 0.0,
            InnerFunction::L1 { weight } => weight * theta.iter().map(|v| v.abs()).sum::<f64>(),
            InnerFunction::Point { target } => {
                if (theta - target).norm() <= FEASIBILITY_TOL * (1.0 + target.norm() + theta.norm()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Euclidean prox `prox_{λφ}`.
    pub fn prox(&self, theta: &Vector, lambda: f64) -> Vector {
        match self {
            InnerFunction::Zero => theta.clone(),
            InnerFunction::L1 { weight } => theta.map(|v| prox::soft_threshold(v, weight * lambda)),
            InnerFunction::Point { target } => target.clone(),
        }
    }
}

type ProxFn = dyn Fn(&Vector, f64) -> Vector + Send + Sync;
type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;

/// User-supplied prox-capable function.
#[derive(Clone)]
pub struct CustomTerm {
    pub name: String,
    pub prox: Arc<ProxFn>,
    pub value: Arc<ValueFn>,
    pub smoothness: f64,
}

impl fmt::Debug for CustomTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomTerm").field("name", &self.name).field("smoothness", &self.smoothness).finish()
    }
}

impl PartialEq for CustomTerm {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.prox, &other.prox)
    }
}

/// The kinds of prox-capable convex functions used for `gⱼ` and `R`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxKind {
    Zero,
    /// `w ‖x‖₁`
    L1 { weight: f64 },
    /// `ind{aᵀx = b}`
    Hyperplane { normal: Vector, offset: f64 },
    /// `ind{Aᵀx = b}`
    Affine(AffineSet),
    /// `ind{|cᵀx − center| ≤ radius}`
    Slab { normal: Vector, center: f64, radius: f64 },
    /// `max{0, 1 − label·aᵀx}`
    Hinge { features: Vector, label: f64 },
    /// `w ‖x‖_G`
    GroupNorm { group: GroupSpec, weight: f64 },
    /// `‖x − center‖`
    Distance { center: Vector },
    /// `φ(aᵀx)` with piecewise-linear `φ`
    PiecewiseLinear { normal: Vector, phi: PiecewiseLinearPhi },
    /// `(w/2)(aᵀx − b)²`, smooth with `L = w‖a‖²`
    QuadraticRow { normal: Vector, target: f64, weight: f64 },
    /// `(w/2)‖x − center‖²`, smooth with `L = w`
    SquaredDistance { center: Vector, weight: f64 },
    /// `φ(Aᵀx)` for full-column-rank `A`
    Composition { map: LinearMap, inner: InnerFunction },
    Custom(CustomTerm),
}

/// Linear structure `g(x) = φ(Aᵀx)`; `offset` is set for affine constraints `Aᵀx = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStructure {
    pub matrix: Matrix,
    pub offset: Option<Vector>,
}

/// A proper closed convex function with a computable prox.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxTerm {
    dim: usize,
    kind: ProxKind,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("{name} must be positive, got {v}")))
    }
}

fn nonzero(name: &str, a: &Vector) -> Result<()> {
    if a.norm_squared() > 0.0 {
        Ok(())
    } else {
        Err(Error::arg(format!("{name} must be nonzero")))
    }
}

impl ProxTerm {
    pub fn zero(dim: usize) -> Self {
        ProxTerm { dim, kind: ProxKind::Zero }
    }

    pub fn l1(dim: usize, weight: f64) -> Result<Self> {
        positive("l1 weight", weight)?;
        Ok(ProxTerm { dim, kind: ProxKind::L1 { weight } })
    }

    pub fn hyperplane(normal: Vector, offset: f64) -> Result<Self> {
        nonzero("hyperplane normal", &normal)?;
        Ok(ProxTerm { dim: normal.len(), kind: ProxKind::Hyperplane { normal, offset } })
    }

    pub fn affine(matrix: Matrix, offset: Vector) -> Result<Self> {
        let set = AffineSet::new(matrix, offset)?;
        Ok(ProxTerm { dim: set.dim(), kind: ProxKind::Affine(set) })
    }

    pub fn slab(normal: Vector, center: f64, radius: f64) -> Result<Self> {
        nonzero("slab normal", &normal)?;
        if !(radius >= 0.0) {
            return Err(Error::arg("slab radius must be nonnegative"));
        }
        Ok(ProxTerm { dim: normal.len(), kind: ProxKind::Slab { normal, center, radius } })
    }

    pub fn hinge(features: Vector, label: f64) -> Result<Self> {
        nonzero("hinge features", &features)?;
        if label != 1.0 && label != -1.0 {
            return Err(Error::arg(format!("hinge label must be ±1, got {label}")));
        }
        Ok(ProxTerm { dim: features.len(), kind: ProxKind::Hinge { features, label } })
    }

    pub fn group_norm(dim: usize, group: GroupSpec, weight: f64) -> Result<Self> {
        positive("group weight", weight)?;
        if group.indices().last().is_some_and(|&i| i >= dim) {
            return Err(Error::arg("group index out of range"));
        }
        Ok(ProxTerm { dim, kind: ProxKind::GroupNorm { group, weight } })
    }

    pub fn distance(center: Vector) -> Self {
        ProxTerm { dim: center.len(), kind: ProxKind::Distance { center } }
    }

    pub fn piecewise_linear(normal: Vector, phi: PiecewiseLinearPhi) -> Result<Self> {
        nonzero("composition vector", &normal)?;
        Ok(ProxTerm { dim: normal.len(), kind: ProxKind::PiecewiseLinear { normal, phi } })
    }

    pub fn quadratic_row(normal: Vector, target: f64, weight: f64) -> Result<Self> {
        nonzero("quadratic row", &normal)?;
        positive("quadratic weight", weight)?;
        Ok(ProxTerm { dim: normal.len(), kind: ProxKind::QuadraticRow { normal, target, weight } })
    }

    pub fn squared_distance(center: Vector, weight: f64) -> Result<Self> {
        positive("squared-distance weight", weight)?;
        Ok(ProxTerm { dim: center.len(), kind: ProxKind::SquaredDistance { center, weight } })
    }

    pub fn composition(matrix: Matrix, inner: InnerFunction) -> Result<Self> {
        let map = LinearMap::new(matrix)?;
        if let InnerFunction::Point { target } = &inner {
            check_dim(map.inner_dim(), target.len())?;
        }
        Ok(ProxTerm { dim: map.dim(), kind: ProxKind::Composition { map, inner } })
    }

    pub fn custom(dim: usize, term: CustomTerm) -> Self {
        ProxTerm { dim, kind: ProxKind::Custom(term) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ProxKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ProxKind::Zero)
    }

    /// `prox_{step·g}(x)`
    pub fn prox(&self, x: &Vector, step: f64) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        if !(step > 0.0) {
            return Err(Error::arg(format!("prox step must be positive, got {step}")));
        }
        match &self.kind {
            ProxKind::Zero => Ok(x.clone()),
            ProxKind::L1 { weight } => prox::prox_l1(x, weight * step),
            ProxKind::Hyperplane { normal, offset } => prox::project_hyperplane(x, normal, *offset),
            ProxKind::Affine(set) => set.project(x),
            ProxKind::Slab { normal, center, radius } => prox::project_slab(x, normal, *center, *radius),
            ProxKind::Hinge { features, label } => prox::prox_hinge(x, features, *label, step),
            ProxKind::GroupNorm { group, weight } => prox::prox_group_norm(x, group, weight * step),
            ProxKind::Distance { center } => prox::prox_l2_distance(x, center, step),
            ProxKind::PiecewiseLinear { normal, phi } => {
                prox::prox_piecewise_linear_composition(x, normal, phi, step)
            }
            ProxKind::QuadraticRow { normal, target, weight } => {
                prox::prox_rank1_composition(x, normal, prox::scalar::square(*weight, *target), step)
            }
            ProxKind::SquaredDistance { center, weight } => {
                Ok((x + center * (step * weight)) / (1.0 + step * weight))
            }
            ProxKind::Composition { map, inner: InnerFunction::L1 { weight } }
                if map.inner_dim() <= prox::L1_COMPOSITION_MAX_K =>
            {
                prox::prox_l1_composition(x, map.matrix(), *weight, step)
            }
            ProxKind::Composition { map, inner: InnerFunction::Point { target } } => map.project(x, target),
            ProxKind::Composition { map, inner } => {
                prox::prox_composition_general(x, map, |t, l| inner.prox(t, l), step)
            }
            ProxKind::Custom(c) => {
                let out = (c.prox)(x, step);
                check_dim(self.dim, out.len())?;
                Ok(out)
            }
        }
    }

    /// Function value; `+∞` outside the effective domain.
    pub fn value(&self, x: &Vector) -> f64 {
        let tol = |scale: f64| FEASIBILITY_TOL * (1.0 + scale);
        match &self.kind {
            ProxKind::Zero => 0.0,
            ProxKind::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxKind::Hyperplane { normal, offset } => {
                let r = normal.dot(x) - offset;
                if r.abs() <= tol(offset.abs() + normal.norm() * x.norm()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxKind::Affine(set) => {
                if set.contains(x, FEASIBILITY_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxKind::Slab { normal, center, radius } => {
                let s = (normal.dot(x) - center).abs();
                if s <= radius + tol(center.abs() + normal.norm() * x.norm()) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxKind::Hinge { features, label } => (1.0 - label * features.dot(x)).max(0.0),
            ProxKind::GroupNorm { group, weight } => weight * group.norm(x),
            ProxKind::Distance { center } => (x - center).norm(),
            ProxKind::PiecewiseLinear { normal, phi } => phi.value(normal.dot(x)),
            ProxKind::QuadraticRow { normal, target, weight } => {
                let r = normal.dot(x) - target;
                0.5 * weight * r * r
            }
            ProxKind::SquaredDistance { center, weight } => 0.5 * weight * (x - center).norm_squared(),
            ProxKind::Composition { map, inner } => inner.value(&map.matrix().tr_mul(x)),
            ProxKind::Custom(c) => (c.value)(x),
        }
    }

    /// Smoothness constant `Lⱼ`; `+∞` for non-smooth terms.
    pub fn smoothness(&self) -> f64 {
        match &self.kind {
            ProxKind::Zero => 0.0,
            ProxKind::QuadraticRow { normal, weight, .. } => weight * normal.norm_squared(),
            ProxKind::SquaredDistance { weight, .. } => *weight,
            ProxKind::Composition { inner: InnerFunction::Zero, .. } => 0.0,
            ProxKind::Custom(c) => c.smoothness,
            _ => f64::INFINITY,
        }
    }

    /// Gradient for smooth terms.
    pub fn gradient(&self, x: &Vector) -> Option<Vector> {
        match &self.kind {
            ProxKind::Zero => Some(Vector::zeros(self.dim)),
            ProxKind::QuadraticRow { normal, target, weight } => {
                Some(normal * (weight * (normal.dot(x) - target)))
            }
            ProxKind::SquaredDistance { center, weight } => Some((x - center) * *weight),
            _ => None,
        }
    }

    /// `Aⱼ` (and `bⱼ` for affine constraints) when `g(x) = φ(Aᵀx)`.
    pub fn linear_structure(&self) -> Option<LinearStructure> {
        let col = |v: &Vector| Matrix::from_columns(std::slice::from_ref(v));
        match &self.kind {
            ProxKind::Hyperplane { normal, offset } => {
                Some(LinearStructure { matrix: col(normal), offset: Some(Vector::from_element(1, *offset)) })
            }
            ProxKind::Affine(set) => {
                Some(LinearStructure { matrix: set.matrix().clone(), offset: Some(set.offset().clone()) })
            }
            ProxKind::Slab { normal, .. } => Some(LinearStructure { matrix: col(normal), offset: None }),
            ProxKind::Hinge { features, .. } => Some(LinearStructure { matrix: col(features), offset: None }),
            ProxKind::PiecewiseLinear { normal, .. } | ProxKind::QuadraticRow { normal, .. } => {
                Some(LinearStructure { matrix: col(normal), offset: None })
            }
            ProxKind::GroupNorm { group, .. } => {
                let cols: Vec<Vector> = group
                    .indices()
                    .iter()
                    .map(|&i| {
                        let mut e = Vector::zeros(self.dim);
                        e[i] = 1.0;
                        e
                    })
                    .collect();
                Some(LinearStructure { matrix: Matrix::from_columns(&cols), offset: None })
            }
            ProxKind::Composition { map, inner } => Some(LinearStructure {
                matrix: map.matrix().clone(),
                offset: match inner {
                    InnerFunction::Point { target } => Some(target.clone()),
                    _ => None,
                },
            }),
            _ => None,
        }
    }

    /// Affine constraint view `{x : Aᵀx = b}` for indicator terms.
    pub fn affine_constraint(&self) -> Option<AffineSet> {
        match &self.kind {
            ProxKind::Hyperplane { normal, offset } => {
                AffineSet::new(Matrix::from_columns(std::slice::from_ref(normal)), Vector::from_element(1, *offset)).ok()
            }
            ProxKind::Affine(set) => Some(set.clone()),
            ProxKind::Composition { map, inner: InnerFunction::Point { target } } => {
                AffineSet::new(map.matrix().clone(), target.clone()).ok()
            }
            _ => None,
        }
    }

    /// Spectral norm `‖Aⱼ‖` of the linear structure.
    pub fn matrix_norm(&self) -> Option<f64> {
        self.linear_structure().map(|s| spectral_norm(&s.matrix))
    }

    fn digest(&self, h: &mut Sha256) {
        let tag = |h: &mut Sha256, s: &str| h.update(s.as_bytes());
        tag(h, "prox");
        h.update((self.dim as u64).to_le_bytes());
        match &self.kind {
            ProxKind::Zero => tag(h, "zero"),
            ProxKind::L1 { weight } => {
                tag(h, "l1");
                hash_f64s(h, &[*weight]);
            }
            ProxKind::Hyperplane { normal, offset } => {
                tag(h, "hyperplane");
                hash_f64s(h, normal.as_slice());
                hash_f64s(h, &[*offset]);
            }
            ProxKind::Affine(set) => {
                tag(h, "affine");
                hash_f64s(h, set.matrix().as_slice());
                hash_f64s(h, set.offset().as_slice());
            }
            ProxKind::Slab { normal, center, radius } => {
                tag(h, "slab");
                hash_f64s(h, normal.as_slice());
                hash_f64s(h, &[*center, *radius]);
            }
            ProxKind::Hinge { features, label } => {
                tag(h, "hinge");
                hash_f64s(h, features.as_slice());
                hash_f64s(h, &[*label]);
            }
            ProxKind::GroupNorm { group, weight } => {
                tag(h, "group");
                for &i in group.indices() {
                    h.update((i as u64).to_le_bytes());
                }
                hash_f64s(h, &[*weight]);
            }
            ProxKind::Distance { center } => {
                tag(h, "distance");
                hash_f64s(h, center.as_slice());
            }
            ProxKind::PiecewiseLinear { normal, phi } => {
                tag(h, "piecewise");
                hash_f64s(h, normal.as_slice());
                hash_f64s(h, &[phi.left(), phi.right()]);
            }
            ProxKind::QuadraticRow { normal, target, weight } => {
                tag(h, "quadrow");
                hash_f64s(h, normal.as_slice());
                hash_f64s(h, &[*target, *weight]);
            }
            ProxKind::SquaredDistance { center, weight } => {
                tag(h, "sqdist");
                hash_f64s(h, center.as_slice());
                hash_f64s(h, &[*weight]);
            }
            ProxKind::Composition { map, inner } => {
                tag(h, "composition");
                hash_f64s(h, map.matrix().as_slice());
                match inner {
                    InnerFunction::Zero => tag(h, "zero"),
                    InnerFunction::L1 { weight } => {
                        tag(h, "l1");
                        hash_f64s(h, &[*weight]);
                    }
                    InnerFunction::Point { target } => {
                        tag(h, "point");
                        hash_f64s(h, target.as_slice());
                    }
                }
            }
            ProxKind::Custom(c) => {
                tag(h, "custom");
                tag(h, &c.name);
            }
        }
    }
}

fn hash_f64s(h: &mut Sha256, xs: &[f64]) {
    for x in xs {
        h.update(x.to_bits().to_le_bytes());
    }
}

fn digest_row(h: &mut Sha256, row: &Row) {
    match row {
        Row::Dense(v) => hash_f64s(h, v.as_slice()),
        Row::Sparse(s) => {
            for (&i, &v) in s.indices.iter().zip(&s.values) {
                h.update((i as u64).to_le_bytes());
                h.update(v.to_bits().to_le_bytes());
            }
        }
    }
}

/// A full instance of `min_x f(x) + (1/m) Σⱼ gⱼ(x) + R(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    smooth: SmoothTerm,
    prox_terms: Vec<ProxTerm>,
    regularizer: ProxTerm,
}

impl Problem {
    pub fn new(smooth: SmoothTerm, prox_terms: Vec<ProxTerm>, regularizer: ProxTerm) -> Result<Self> {
        let d = smooth.dim();
        if d == 0 {
            return Err(Error::arg("dimension must be positive"));
        }
        for g in &prox_terms {
            check_dim(d, g.dim())?;
        }
        check_dim(d, regularizer.dim())?;
        Ok(Problem { smooth, prox_terms, regularizer })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn m(&self) -> usize {
        self.prox_terms.len()
    }

    pub fn smooth(&self) -> &SmoothTerm {
        &self.smooth
    }

    pub fn prox_terms(&self) -> &[ProxTerm] {
        &self.prox_terms
    }

    pub fn regularizer(&self) -> &ProxTerm {
        &self.regularizer
    }

    /// True when every `gⱼ` is an affine-constraint indicator.
    pub fn all_affine_constraints(&self) -> bool {
        self.m() > 0 && self.prox_terms.iter().all(|g| g.affine_constraint().is_some())
    }

    /// Content hash over all numeric data.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        let s = &self.smooth;
        hash_f64s(&mut h, &[s.lipschitz, s.strong_convexity]);
        h.update([s.expectation_mode as u8]);
        for c in &s.components {
            match c {
                SmoothComponent::Zero => h.update(b"zero"),
                SmoothComponent::Quadratic { hessian, center } => {
                    h.update(b"quad");
                    hash_f64s(&mut h, hessian.as_slice());
                    hash_f64s(&mut h, center.as_slice());
                }
                SmoothComponent::LeastSquares { row, target, ridge } => {
                    h.update(b"ls");
                    digest_row(&mut h, row);
                    hash_f64s(&mut h, &[*target, *ridge]);
                }
                SmoothComponent::Logistic { row, label, ridge } => {
                    h.update(b"logit");
                    digest_row(&mut h, row);
                    hash_f64s(&mut h, &[*label, *ridge]);
                }
            }
        }
        for g in &self.prox_terms {
            g.digest(&mut h);
        }
        h.update(b"regularizer");
        self.regularizer.digest(&mut h);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `f(x) + (1/m) Σ gⱼ(x) + R(x)`, `+∞` if any term is infinite.
pub fn eval_objective(problem: &Problem, x: &Vector) -> Result<f64> {
    check_dim(problem.dim(), x.len())?;
    let mut total = problem.smooth.value(x);
    if problem.m() > 0 {
        let mut gsum = 0.0;
        for g in &problem.prox_terms {
            let v = g.value(x);
            if v == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            gsum += v;
        }
        total += gsum / problem.m() as f64;
    }
    let r = problem.regularizer.value(x);
    if r == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(total + r)
}

/// `D_f(x, y) = f(x) − f(y) − ⟨∇f(y), x − y⟩`.
pub fn bregman_divergence(smooth: &SmoothTerm, x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(smooth.dim(), x.len())?;
    check_dim(smooth.dim(), y.len())?;
    Ok(smooth.value(x) - smooth.value(y) - smooth.gradient(y).dot(&(x - y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn objective_examples() {
        let f = SmoothTerm::half_squared_distance(v(&[0.0, 0.0]));
        let p = Problem::new(f.clone(), vec![], ProxTerm::zero(2)).unwrap();
        assert_eq!(eval_objective(&p, &v(&[3.0, 4.0])).unwrap(), 12.5);

        let ind = ProxTerm::hyperplane(v(&[1.0, 0.0]), 0.0).unwrap();
        let p = Problem::new(SmoothTerm::zero(2), vec![ind.clone()], ProxTerm::zero(2)).unwrap();
        assert_eq!(eval_objective(&p, &v(&[1.0, 0.0])).unwrap(), f64::INFINITY);

        let p = Problem::new(f, vec![ind], ProxTerm::zero(2)).unwrap();
        assert_eq!(eval_objective(&p, &v(&[0.0, 2.0])).unwrap(), 2.0);
        assert!(matches!(eval_objective(&p, &v(&[0.0])), Err(Error::Dimension { .. })));
    }

    #[test]
    fn bregman_examples() {
        let f = SmoothTerm::half_squared_distance(v(&[0.0, 0.0]));
        assert_eq!(bregman_divergence(&f, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.5);
        let x = v(&[0.3, -0.2]);
        assert_eq!(bregman_divergence(&f, &x, &x).unwrap(), 0.0);
        assert!(bregman_divergence(&f, &x, &v(&[1.0])).is_err());
    }

    #[test]
    fn smooth_term_validation() {
        assert!(SmoothTerm::new(2, vec![], 1.0, 0.0).is_err());
        assert!(SmoothTerm::new(2, vec![SmoothComponent::Zero], 1.0, 2.0).is_err());
        assert!(SmoothTerm::new(2, vec![SmoothComponent::Zero], 1.0, -1.0).is_err());
        let row = Row::Dense(v(&[1.0, 2.0, 3.0]));
        let bad = SmoothComponent::LeastSquares { row, target: 0.0, ridge: 0.0 };
        assert!(SmoothTerm::new(2, vec![bad], 14.0, 0.0).is_err());
    }

    #[test]
    fn gradient_is_mean_of_components() {
        let comps = vec![
            SmoothComponent::LeastSquares { row: Row::Dense(v(&[1.0, 2.0])), target: 1.0, ridge: 0.1 },
            SmoothComponent::Logistic { row: Row::Dense(v(&[-1.0, 0.5])), label: 1.0, ridge: 0.0 },
            SmoothComponent::Quadratic { hessian: Matrix::identity(2, 2) * 3.0, center: v(&[1.0, 1.0]) },
        ];
        let f = SmoothTerm::new(2, comps.clone(), 10.0, 0.0).unwrap();
        let x = v(&[0.4, -0.7]);
        let direct: Vector = comps.iter().map(|c| c.gradient(&x)).fold(Vector::zeros(2), |a, g| a + g) / 3.0;
        assert!((f.gradient(&x) - direct).amax() < 1e-15);
    }

    #[test]
    fn prox_term_values_and_domains() {
        let h = ProxTerm::hyperplane(v(&[3.0, 4.0]), 10.0).unwrap();
        let p = h.prox(&v(&[0.0, 0.0]), 1.0).unwrap();
        assert_eq!(h.value(&p), 0.0);
        assert!(ProxTerm::hinge(v(&[1.0, 0.0]), 0.5).is_err());
        assert!(ProxTerm::hyperplane(v(&[0.0, 0.0]), 1.0).is_err());
        let q = ProxTerm::quadratic_row(v(&[1.0, 2.0]), 0.5, 2.0).unwrap();
        assert_eq!(q.smoothness(), 10.0);
        assert_eq!(h.smoothness(), f64::INFINITY);
    }

    #[test]
    fn fingerprint_is_content_based() {
        let f = SmoothTerm::half_squared_distance(v(&[1.0, 0.0]));
        let g = vec![ProxTerm::hyperplane(v(&[1.0, 1.0]), 1.0).unwrap()];
        let p1 = Problem::new(f.clone(), g.clone(), ProxTerm::zero(2)).unwrap();
        let p2 = Problem::new(f.clone(), g, ProxTerm::zero(2)).unwrap();
        assert_eq!(p1.fingerprint(), p2.fingerprint());
        let g3 = vec![ProxTerm::hyperplane(v(&[1.0, 1.0]), 2.0).unwrap()];
        let p3 = Problem::new(f, g3, ProxTerm::zero(2)).unwrap();
        assert_ne!(p1.fingerprint(), p3.fingerprint());
    }
}
