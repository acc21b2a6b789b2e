//! Python bindings: potentials, D-projections, the cyclic solver, signal
//! generators and baselines. Vectors are Python lists of floats, matrices
//! are lists of rows.

use bregman_cs as core;
use bregman_cs::{FunctionalKind, Hyperplane, InitialPoint, Matrix, SolverConfig, Transform};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::SolverFailure { .. } | core::Error::Projection { .. } | core::Error::Infeasible => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn kind(name: &str) -> PyResult<FunctionalKind> {
    name.parse().map_err(|e: core::Error| PyValueError::new_err(e.to_string()))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(<[f64]>::to_vec).collect()
}

/// Potential `g(v)` of `kind` at `v`.
#[pyfunction]
fn potential(kind_name: &str, v: f64) -> PyResult<f64> {
    kind(kind_name)?.potential(v).map_err(err)
}

/// Gradient `g'(v)`.
#[pyfunction]
fn gradient(kind_name: &str, v: f64) -> PyResult<f64> {
    kind(kind_name)?.gradient(v).map_err(err)
}

/// Inverse gradient `(g')^{-1}(u)`.
#[pyfunction]
fn gradient_inverse(kind_name: &str, u: f64) -> PyResult<f64> {
    Ok(kind(kind_name)?.gradient_inverse(u))
}

/// Bregman distance `D(a, b)` summed over coordinates.
#[pyfunction]
fn bregman_distance(kind_name: &str, a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    kind(kind_name)?.bregman_distance(&a, &b).map_err(err)
}

#[pyclass(name = "Projection", frozen, get_all)]
struct PyProjection {
    point: Vec<f64>,
    multiplier: f64,
    newton_iters: usize,
    residual: f64,
}

/// D-projection of `s0` onto `{s : row . s = value}`.
#[pyfunction]
fn project(kind_name: &str, s0: Vec<f64>, row: Vec<f64>, value: f64) -> PyResult<PyProjection> {
    let h = Hyperplane::new(row, value).map_err(err)?;
    let p = core::project(kind(kind_name)?, &s0, &h).map_err(err)?;
    Ok(PyProjection { point: p.point, multiplier: p.multiplier, newton_iters: p.newton_iters, residual: p.residual })
}

#[pyclass(name = "Trace", frozen, get_all)]
struct PyTrace {
    termination: String,
    sweeps_run: usize,
    projections: usize,
    returned_sweep: usize,
    max_residual: Vec<f64>,
    iterate_delta: Vec<f64>,
}

impl From<core::SolverTrace> for PyTrace {
    fn from(t: core::SolverTrace) -> Self {
        PyTrace {
            termination: t.termination.name().to_string(),
            sweeps_run: t.sweeps_run,
            projections: t.projections,
            returned_sweep: t.returned_sweep,
            max_residual: t.per_sweep.iter().map(|s| s.max_residual).collect(),
            iterate_delta: t.per_sweep.iter().map(|s| s.iterate_delta).collect(),
        }
    }
}

fn config(
    kind_name: &str,
    max_sweeps: Option<usize>,
    feas_tol: Option<f64>,
    delta_tol: Option<f64>,
    initial: Option<Vec<f64>>,
) -> PyResult<SolverConfig> {
    let mut c = SolverConfig::new(kind(kind_name)?);
    if let Some(v) = max_sweeps {
        c.max_sweeps = v;
    }
    if let Some(v) = feas_tol {
        c.feas_tol = v;
    }
    if let Some(v) = delta_tol {
        c.delta_tol = v;
    }
    if let Some(v) = initial {
        c.initial_point = InitialPoint::Provided(v);
    }
    Ok(c)
}

/// Cyclic D-projections onto the rows of `theta s = y`. Returns `(s, trace)`.
#[pyfunction]
#[pyo3(signature = (kind_name, theta, y, max_sweeps=None, feas_tol=None, delta_tol=None, initial=None))]
fn solve(
    kind_name: &str,
    theta: Vec<Vec<f64>>,
    y: Vec<f64>,
    max_sweeps: Option<usize>,
    feas_tol: Option<f64>,
    delta_tol: Option<f64>,
    initial: Option<Vec<f64>>,
) -> PyResult<(Vec<f64>, PyTrace)> {
    let c = config(kind_name, max_sweeps, feas_tol, delta_tol, initial)?;
    let h = core::hyperplanes_from(&matrix(theta)?, &y).map_err(err)?;
    let (s, trace) = core::solve(&h, &c).map_err(err)?;
    Ok((s, trace.into()))
}

/// Incremental solver: rows arrive one at a time.
#[pyclass(name = "OnlineSolver")]
struct PyOnlineSolver {
    inner: core::OnlineSolver,
}

#[pymethods]
impl PyOnlineSolver {
    #[new]
    #[pyo3(signature = (n, kind_name, max_sweeps=None, feas_tol=None, delta_tol=None))]
    fn new(n: usize, kind_name: &str, max_sweeps: Option<usize>, feas_tol: Option<f64>, delta_tol: Option<f64>) -> PyResult<Self> {
        let c = config(kind_name, max_sweeps, feas_tol, delta_tol, None)?;
        Ok(PyOnlineSolver { inner: core::OnlineSolver::new(n, c).map_err(err)? })
    }

    /// Projects onto the new row, then runs `refresh_sweeps` sweeps over all rows.
    #[pyo3(signature = (row, value, refresh_sweeps=1))]
    fn append(&mut self, row: Vec<f64>, value: f64, refresh_sweeps: usize) -> PyResult<f64> {
        let h = Hyperplane::new(row, value).map_err(err)?;
        self.inner.append(h, refresh_sweeps).map_err(err)
    }

    /// Sweeps the stored rows under the batch stopping rules.
    fn settle(&mut self) -> PyResult<PyTrace> {
        Ok(self.inner.settle().map_err(err)?.into())
    }

    #[getter]
    fn current(&self) -> Vec<f64> {
        self.inner.current().to_vec()
    }

    #[getter]
    fn projections(&self) -> usize {
        self.inner.projections()
    }

    fn max_residual(&self) -> f64 {
        self.inner.max_residual()
    }
}

/// `phi` (`m x n`), `psi` (`n x n`) and `theta = phi psi`.
#[pyclass(name = "SensingEnsemble", frozen)]
struct PyEnsemble {
    inner: core::SensingEnsemble,
}

#[pymethods]
impl PyEnsemble {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn phi(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.phi)
    }

    #[getter]
    fn psi(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.psi)
    }

    #[getter]
    fn theta(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.theta)
    }

    /// `y = theta s`.
    fn measure(&self, s: Vec<f64>) -> PyResult<Vec<f64>> {
        core::measure(&self.inner, &s).map_err(err)
    }
}

/// Gaussian `m x n` measurement matrix with the given synthesis transform.
#[pyfunction]
#[pyo3(signature = (n, m, seed, transform="identity"))]
fn make_gaussian_ensemble(n: usize, m: usize, seed: u64, transform: &str) -> PyResult<PyEnsemble> {
    let t: Transform = transform.parse().map_err(|e: core::Error| PyValueError::new_err(e.to_string()))?;
    Ok(PyEnsemble { inner: core::make_gaussian_ensemble(n, m, seed, t).map_err(err)? })
}

/// Random `sparsity`-sparse vector with magnitudes in `[amplitude_min, amplitude_max]`.
#[pyfunction]
fn make_random_sparse(n: usize, sparsity: usize, amplitude_min: f64, amplitude_max: f64, seed: u64) -> PyResult<Vec<f64>> {
    let spec = core::SparseSignalSpec { n, sparsity, amplitude_range: (amplitude_min, amplitude_max), seed };
    core::make_random_sparse(&spec).map_err(err)
}

/// Cusp waveform and its thresholded DCT coefficients: `(x, s)`.
#[pyfunction]
#[pyo3(signature = (n, sparsity, amplitude=1.0))]
fn make_cusp(n: usize, sparsity: usize, amplitude: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    core::make_cusp_scaled(n, sparsity, amplitude).map_err(err)
}

#[pyfunction]
fn dct_forward(x: Vec<f64>) -> Vec<f64> {
    core::dct_forward(&x)
}

#[pyfunction]
fn dct_inverse(s: Vec<f64>) -> Vec<f64> {
    core::dct_inverse(&s)
}

/// Minimum-norm solution of `theta s = y`.
#[pyfunction]
fn pseudo_inverse_solve(ens: &PyEnsemble, y: Vec<f64>) -> PyResult<Vec<f64>> {
    core::pseudo_inverse_solve(&ens.inner, &y).map_err(err)
}

/// Sparsest exact solution with at most `k_max` nonzeros (small `n` only).
#[pyfunction]
#[pyo3(signature = (ens, y, k_max=3))]
fn l0_oracle(ens: &PyEnsemble, y: Vec<f64>, k_max: usize) -> PyResult<Vec<f64>> {
    core::l0_oracle(&ens.inner, &y, k_max).map_err(err)
}

#[pyclass(name = "Report", frozen, get_all)]
struct PyReport {
    rel_l2_error: f64,
    relative: bool,
    support_precision: f64,
    support_recall: f64,
    residual_inf: f64,
}

/// Error, support precision/recall and measurement residual of `s_hat`.
#[pyfunction]
#[pyo3(signature = (s_hat, s_star, ens, y, support_eps=1e-3))]
fn evaluate(s_hat: Vec<f64>, s_star: Vec<f64>, ens: &PyEnsemble, y: Vec<f64>, support_eps: f64) -> PyResult<PyReport> {
    let r = core::evaluate(&s_hat, &s_star, &ens.inner, &y, support_eps).map_err(err)?;
    Ok(PyReport {
        rel_l2_error: r.rel_l2_error,
        relative: r.relative,
        support_precision: r.support_precision,
        support_recall: r.support_recall,
        residual_inf: r.residual_inf,
    })
}

#[pymodule(name = "bregman_cs")]
fn bindings(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(potential, m)?)?;
    m.add_function(wrap_pyfunction!(gradient, m)?)?;
    m.add_function(wrap_pyfunction!(gradient_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(bregman_distance, m)?)?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(make_gaussian_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(make_random_sparse, m)?)?;
    m.add_function(wrap_pyfunction!(make_cusp, m)?)?;
    m.add_function(wrap_pyfunction!(dct_forward, m)?)?;
    m.add_function(wrap_pyfunction!(dct_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_inverse_solve, m)?)?;
    m.add_function(wrap_pyfunction!(l0_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<PyProjection>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyOnlineSolver>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyReport>()?;
    Ok(())
}
