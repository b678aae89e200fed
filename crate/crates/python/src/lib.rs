//! Python bindings: problems, prox terms, the solver and the reductions.

use std::collections::BTreeMap;

use decoupling::problems::{least_squares_term, Dataset, ProblemDescription};
use decoupling::reductions::run_kaczmarz;
use decoupling::{
    eval_objective, EstimatorKind, Matrix, ProjectionMode, Sampling, Schedule, SmoothComponent, Solver, StepConfig,
    TraceRecord, Vector,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: decoupling::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector(v: Vec<f64>) -> Vector {
    Vector::from_vec(v)
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows must have equal length"));
    }
    Ok(Matrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// `d × k` matrix from `k` columns of length `d`.
fn from_columns(cols: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Ok(matrix(cols)?.transpose())
}

fn list(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

#[pyclass(name = "ProxTerm", module = "pydecoupling", frozen, from_py_object)]
#[derive(Clone)]
struct PyProxTerm(decoupling::ProxTerm);

#[pymethods]
impl PyProxTerm {
    #[staticmethod]
    fn zero(dim: usize) -> Self {
        PyProxTerm(decoupling::ProxTerm::zero(dim))
    }

    #[staticmethod]
    fn l1(dim: usize, weight: f64) -> PyResult<Self> {
        decoupling::ProxTerm::l1(dim, weight).map(PyProxTerm).map_err(err)
    }

    /// Indicator of `{x : aᵀx = b}`.
    #[staticmethod]
    fn hyperplane(normal: Vec<f64>, offset: f64) -> PyResult<Self> {
        decoupling::ProxTerm::hyperplane(vector(normal), offset).map(PyProxTerm).map_err(err)
    }

    /// Indicator of `{x : Aᵀx = b}`; `columns` are the `k` columns of the `d × k` matrix `A`.
    #[staticmethod]
    fn affine(columns: Vec<Vec<f64>>, offset: Vec<f64>) -> PyResult<Self> {
        decoupling::ProxTerm::affine(from_columns(columns)?, vector(offset)).map(PyProxTerm).map_err(err)
    }

    #[staticmethod]
    fn slab(normal: Vec<f64>, center: f64, radius: f64) -> PyResult<Self> {
        decoupling::ProxTerm::slab(vector(normal), center, radius).map(PyProxTerm).map_err(err)
    }

    #[staticmethod]
    fn hinge(features: Vec<f64>, label: f64) -> PyResult<Self> {
        decoupling::ProxTerm::hinge(vector(features), label).map(PyProxTerm).map_err(err)
    }

    #[staticmethod]
    fn distance(center: Vec<f64>) -> Self {
        PyProxTerm(decoupling::ProxTerm::distance(vector(center)))
    }

    #[staticmethod]
    fn quadratic_row(normal: Vec<f64>, target: f64, weight: f64) -> PyResult<Self> {
        decoupling::ProxTerm::quadratic_row(vector(normal), target, weight).map(PyProxTerm).map_err(err)
    }

    #[staticmethod]
    fn squared_distance(center: Vec<f64>, weight: f64) -> PyResult<Self> {
        decoupling::ProxTerm::squared_distance(vector(center), weight).map(PyProxTerm).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn prox(&self, x: Vec<f64>, step: f64) -> PyResult<Vec<f64>> {
        self.0.prox(&vector(x), step).map(|v| list(&v)).map_err(err)
    }

    /// `inf` outside the domain of an indicator.
    fn value(&self, x: Vec<f64>) -> f64 {
        self.0.value(&vector(x))
    }

    fn smoothness(&self) -> f64 {
        self.0.smoothness()
    }

    fn __repr__(&self) -> String {
        format!("ProxTerm({:?})", self.0.kind()).chars().take(120).collect()
    }
}

#[pyclass(name = "SmoothTerm", module = "pydecoupling", frozen, from_py_object)]
#[derive(Clone)]
struct PySmoothTerm(decoupling::SmoothTerm);

#[pymethods]
impl PySmoothTerm {
    /// `(1/n) Σᵢ ½ (aᵢᵀx − bᵢ)² + (ridge/2)‖x‖²` over the rows of `a`.
    #[staticmethod]
    #[pyo3(signature = (a, b, ridge = 0.0))]
    fn least_squares(a: Vec<Vec<f64>>, b: Vec<f64>, ridge: f64) -> PyResult<Self> {
        let data = Dataset::from_dense(&matrix(a)?, &vector(b)).map_err(err)?;
        least_squares_term(&data, ridge).map(PySmoothTerm).map_err(err)
    }

    /// `½ (x − c)ᵀ H (x − c)`
    #[staticmethod]
    fn quadratic(hessian: Vec<Vec<f64>>, center: Vec<f64>) -> PyResult<Self> {
        let hessian = matrix(hessian)?;
        let dim = center.len();
        let comp = SmoothComponent::Quadratic { hessian, center: vector(center) };
        decoupling::SmoothTerm::quadratic(dim, vec![comp]).map(PySmoothTerm).map_err(err)
    }

    #[staticmethod]
    fn half_squared_distance(center: Vec<f64>) -> Self {
        PySmoothTerm(decoupling::SmoothTerm::half_squared_distance(vector(center)))
    }

    #[staticmethod]
    fn zero(dim: usize) -> Self {
        PySmoothTerm(decoupling::SmoothTerm::zero(dim))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn lipschitz(&self) -> f64 {
        self.0.lipschitz()
    }

    #[getter]
    fn strong_convexity(&self) -> f64 {
        self.0.strong_convexity()
    }

    fn value(&self, x: Vec<f64>) -> f64 {
        self.0.value(&vector(x))
    }

    fn gradient(&self, x: Vec<f64>) -> Vec<f64> {
        list(&self.0.gradient(&vector(x)))
    }
}

#[pyclass(name = "Problem", module = "pydecoupling", frozen, from_py_object)]
#[derive(Clone)]
struct PyProblem(decoupling::Problem);

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (smooth, terms, regularizer = None))]
    fn new(smooth: PySmoothTerm, terms: Vec<PyProxTerm>, regularizer: Option<PyProxTerm>) -> PyResult<Self> {
        let dim = smooth.0.dim();
        let r = regularizer.map_or_else(|| decoupling::ProxTerm::zero(dim), |r| r.0);
        decoupling::Problem::new(smooth.0, terms.into_iter().map(|t| t.0).collect(), r)
            .map(PyProblem)
            .map_err(err)
    }

    /// Named generator, e.g. `Problem.from_builder("pd_system", 1, {"d": 50})`.
    #[staticmethod]
    #[pyo3(signature = (name, seed = 0, params = None))]
    fn from_builder(name: &str, seed: u64, params: Option<BTreeMap<String, Bound<'_, PyAny>>>) -> PyResult<Self> {
        let mut desc = ProblemDescription::new(name, seed);
        for (k, v) in params.unwrap_or_default() {
            desc = desc.with_param(&k, v.str()?.to_cow()?);
        }
        desc.build().map(PyProblem).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn smooth(&self) -> PySmoothTerm {
        PySmoothTerm(self.0.smooth().clone())
    }

    fn fingerprint(&self) -> String {
        self.0.fingerprint()
    }

    /// `F(x)`; `inf` when an indicator is violated.
    fn objective(&self, x: Vec<f64>) -> PyResult<f64> {
        eval_objective(&self.0, &vector(x)).map_err(err)
    }
}

#[pyclass(name = "Reference", module = "pydecoupling", frozen, get_all)]
struct PyReference {
    x: Vec<f64>,
    y: Vec<Vec<f64>>,
    objective: f64,
}

impl PyReference {
    fn to_core(&self) -> decoupling::Reference {
        decoupling::Reference {
            x: vector(self.x.clone()),
            y: self.y.iter().cloned().map(vector).collect(),
            objective: self.objective,
        }
    }
}

#[pyfunction]
fn reference_solution(problem: &PyProblem) -> PyResult<PyReference> {
    let r = decoupling::reference_solution(&problem.0).map_err(err)?;
    Ok(PyReference { x: list(&r.x), y: r.y.iter().map(list).collect(), objective: r.objective })
}

fn record<'py>(py: Python<'py>, r: &TraceRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("t", r.t)?;
    d.set_item("epochs", r.epochs)?;
    d.set_item("prox_evals", r.prox_evals)?;
    d.set_item("residual", r.residual)?;
    d.set_item("objective", r.objective)?;
    d.set_item("objective_gap", r.objective_gap)?;
    d.set_item("dist_sq", r.dist_sq)?;
    d.set_item("lyapunov", r.lyap_total)?;
    Ok(d)
}

fn schedule(name: &str, eta: Option<f64>, a: Option<f64>) -> PyResult<Schedule> {
    match name {
        "constant" => Ok(Schedule::Constant { eta }),
        "decreasing_a" => Ok(Schedule::DecreasingA { a }),
        "sgd_decreasing" => Ok(Schedule::SgdDecreasing { a }),
        other => Err(PyValueError::new_err(format!("unknown schedule '{other}'"))),
    }
}

fn sampling(name: &str, probs: Option<Vec<f64>>) -> PyResult<Sampling> {
    match probs {
        Some(p) => Ok(Sampling::Explicit(p)),
        None => name.parse().map_err(err),
    }
}

/// Trace rows, final `x` and final duals.
type Solved<'py> = (Vec<Bound<'py, PyDict>>, Vec<f64>, Vec<Vec<f64>>);

/// Run the method; returns `(trace, x, y)` where `trace` is a list of dicts.
#[pyfunction]
#[pyo3(signature = (
    problem, estimator = "saga", *, eta = None, schedule_name = "constant", a = None, sampling_name = "uniform",
    probabilities = None, mode = "decoupled", minibatch = 1, seed = 0, max_iters = 1000, tol = 0.0, stride = 1,
    x0 = None, reference = None
))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    estimator: &str,
    eta: Option<f64>,
    schedule_name: &str,
    a: Option<f64>,
    sampling_name: &str,
    probabilities: Option<Vec<f64>>,
    mode: &str,
    minibatch: usize,
    seed: u64,
    max_iters: u64,
    tol: f64,
    stride: u64,
    x0: Option<Vec<f64>>,
    reference: Option<PyRef<'py, PyReference>>,
) -> PyResult<Solved<'py>> {
    let kind: EstimatorKind = estimator.parse().map_err(err)?;
    let mut config = StepConfig::default()
        .with_seed(seed)
        .with_max_iters(max_iters)
        .with_stride(stride)
        .with_minibatch(minibatch)
        .with_sampling(sampling(sampling_name, probabilities)?)
        .with_mode(mode.parse::<ProjectionMode>().map_err(err)?);
    config.schedule = schedule(schedule_name, eta, a)?;
    config.tol = tol;
    if let Some(x) = x0 {
        config = config.with_x0(vector(x));
    }
    let reference = reference.map(|r| r.to_core());
    let mut solver = Solver::new(&problem.0, config, kind).map_err(err)?;
    let trace = solver.run(reference.as_ref()).map_err(err)?;
    let state = solver.into_state();
    let rows = trace.iter().map(|r| record(py, r)).collect::<PyResult<Vec<_>>>()?;
    Ok((rows, list(&state.x), state.y.iter().map(list).collect()))
}

/// Randomized Kaczmarz on `Wx = b`; returns every iterate.
#[pyfunction]
#[pyo3(signature = (w, b, x0, iterations, seed = 0))]
fn kaczmarz(w: Vec<Vec<f64>>, b: Vec<f64>, x0: Vec<f64>, iterations: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let path = run_kaczmarz(&matrix(w)?, &vector(b), &vector(x0), iterations, seed).map_err(err)?;
    Ok(path.iter().map(list).collect())
}

/// Run an invariant suite; one `(name, instances, worst_slack, passed)` per property.
#[pyfunction]
fn check(suite: &str) -> PyResult<Vec<(String, usize, f64, bool)>> {
    let reports = decoupling_bench::checks::run_suite(suite).map_err(err)?;
    Ok(reports.into_iter().map(|r| (r.name, r.instances, r.worst_slack, r.pass)).collect())
}

#[pymodule]
fn pydecoupling(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProxTerm>()?;
    m.add_class::<PySmoothTerm>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyReference>()?;
    m.add_function(wrap_pyfunction!(reference_solution, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(kaczmarz, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("SUITES", decoupling_bench::checks::SUITES.to_vec())?;
    Ok(())
}
