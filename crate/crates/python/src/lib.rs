//! Python module `final_iterate`: adversarial instances, stationary walks,
//! Monte Carlo paths and a projected SGD driver with a Python gradient.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::RngCore;

use final_iterate::convex1d::Convex1d;
use final_iterate::lower_bounds::{self as lb, AdversarialInstance, Family};
use final_iterate::montecarlo::{self as mc, Shape, StartPoint};
use final_iterate::sgd::{run_sgd, FeasibleSet, GradientOracle, StepSchedule};
use final_iterate::walk1d::{self, StationaryMethod, WalkChain};

fn py_err(e: final_iterate::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = final_iterate::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// `ln d/(5T)` for `sc`, `ln d/(32 sqrt T)` for the Lipschitz families.
#[pyfunction]
#[pyo3(signature = (family, d, T))]
#[allow(non_snake_case)]
fn lower_bound(family: &str, d: usize, T: usize) -> PyResult<f64> {
    lb::lower_bound_value(parse(family)?, d, T).map_err(py_err)
}

#[pyclass(name = "AdversarialInstance", frozen)]
struct PyAdversarial {
    inner: AdversarialInstance,
}

#[pymethods]
impl PyAdversarial {
    #[new]
    #[pyo3(signature = (family, d, T))]
    #[allow(non_snake_case)]
    fn new(family: &str, d: usize, T: usize) -> PyResult<Self> {
        let family: Family = parse(family)?;
        Ok(Self { inner: AdversarialInstance::build(family, d, T).map_err(py_err)? })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family().to_string()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dim()
    }

    #[getter(T)]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn bound(&self) -> f64 {
        self.inner.lower_bound()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.eval_f(&x).map_err(py_err)
    }

    fn closed_form_iterate(&self, t: usize) -> PyResult<Vec<f64>> {
        self.inner.closed_form_iterate(t).map_err(py_err)
    }

    /// Engine iterates `x_1..x_(T+1)` and the final value.
    fn run(&self) -> PyResult<(Vec<Vec<f64>>, f64)> {
        let (trace, _) = lb::run_adversarial(&self.inner).map_err(py_err)?;
        let value = trace.final_value();
        Ok((trace.iterates, value))
    }

    #[pyo3(signature = (tol = 1e-9))]
    fn verify<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = lb::verify_instance(&self.inner, tol).map_err(py_err)?;
        let out = PyDict::new(py);
        out.set_item("family", r.family.to_string())?;
        out.set_item("d", r.d)?;
        out.set_item("T", r.horizon)?;
        out.set_item("max_deviation", r.max_deviation)?;
        out.set_item("final_value", r.final_value)?;
        out.set_item("bound", r.bound)?;
        out.set_item("pass", r.pass)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("AdversarialInstance('{}', d={}, T={})", self.inner.family(), self.inner.dim(), self.inner.horizon())
    }
}

/// Stationary distribution of the walk with left-move probabilities `a`.
#[pyfunction]
#[pyo3(signature = (a, method = "closed_form"))]
fn stationary(a: Vec<f64>, method: &str) -> PyResult<(Vec<f64>, f64)> {
    let chain = WalkChain::new(a).map_err(py_err)?;
    let res = walk1d::stationary_solve(&chain, parse::<StationaryMethod>(method)?).map_err(py_err)?;
    Ok((res.p, res.residual))
}

/// Stationary suboptimality of the grid walk for `profile` on `n + 1` points.
#[pyfunction]
#[pyo3(signature = (profile, n, method = "closed_form"))]
fn walk<'py>(py: Python<'py>, profile: &str, n: usize, method: &str) -> PyResult<Bound<'py, PyDict>> {
    let f: Convex1d = parse(profile)?;
    let chain = walk1d::chain_from_function(&f, n).map_err(py_err)?;
    let report = walk1d::WalkReport::new(&chain, &f, f.to_string(), parse(method)?).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("n", report.n)?;
    out.set_item("T", report.horizon)?;
    out.set_item("residual", report.residual)?;
    out.set_item("suboptimality", report.suboptimality)?;
    out.set_item("bound_value", report.bound_value)?;
    out.set_item("p", report.rows.iter().map(|r| r.3).collect::<Vec<_>>())?;
    Ok(out)
}

#[pyclass(name = "NearlyLinearInstance", frozen)]
struct PyNearlyLinear {
    inner: mc::NearlyLinearInstance,
}

#[pymethods]
impl PyNearlyLinear {
    #[new]
    #[pyo3(signature = (shape = "abs", D = 1.0, G = 1.0, eps = 1.0, c = 1.0))]
    #[allow(non_snake_case)]
    fn new(shape: &str, D: f64, G: f64, eps: f64, c: f64) -> PyResult<Self> {
        let shape: Shape = parse(shape)?;
        Ok(Self { inner: mc::NearlyLinearInstance::build(shape, D, G, eps, c).map_err(py_err)? })
    }

    fn value(&self, x: f64) -> f64 {
        self.inner.value(x)
    }

    #[pyo3(signature = (T))]
    #[allow(non_snake_case)]
    fn good_set(&self, T: usize) -> PyResult<(f64, f64)> {
        let s = self.inner.good_set(T).map_err(py_err)?;
        Ok((s.s_left, s.s_right))
    }

    /// Runs `trials` paths from `x0` (uniform start when `None`).
    #[pyo3(signature = (T, trials, x0 = None, seed = 0))]
    #[allow(non_snake_case)]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        T: usize,
        trials: usize,
        x0: Option<f64>,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let start = x0.map_or(StartPoint::Uniform, StartPoint::Fixed);
        let stats = py.detach(|| mc::simulate_paths(&self.inner, T, trials, start, seed)).map_err(py_err)?;
        let (mean, se) = mc::expected_suboptimality(&stats);
        let out = PyDict::new(py);
        out.set_item("mean", mean)?;
        out.set_item("se", se)?;
        out.set_item("never_hit", stats.never_hit())?;
        out.set_item("tail_rate", mc::tail_estimate(&stats, &self.inner).ok().map(|t| t.rate))?;
        out.set_item("final_suboptimality", stats.final_suboptimality)?;
        out.set_item("last_visit", stats.last_visit)?;
        Ok(out)
    }
}

// Gradient oracle backed by a Python callable `grad(x, t) -> list[float]`.
struct PyOracle<'py> {
    grad: Bound<'py, PyAny>,
    dim: usize,
    error: Option<PyErr>,
}

impl GradientOracle for PyOracle<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64]) -> f64 {
        f64::NAN
    }

    fn query(&mut self, x: &[f64], t: usize, _rng: &mut dyn RngCore, grad: &mut [f64]) -> final_iterate::Result<()> {
        let result = self.grad.call1((x.to_vec(), t)).and_then(|g| g.extract::<Vec<f64>>());
        match result {
            Ok(g) if g.len() == grad.len() => {
                grad.copy_from_slice(&g);
                Ok(())
            }
            Ok(g) => Err(final_iterate::Error::DimensionMismatch { expected: grad.len(), got: g.len() }),
            Err(e) => {
                self.error = Some(e);
                Err(final_iterate::Error::InvalidParameter(format!("gradient callback failed at step {t}")))
            }
        }
    }
}

/// Projected SGD on the ball of `radius` with a Python gradient callback.
/// `schedule` is `"1/t"`, `"1/sqrt(t)"`, `"1/sqrt(T)"` or a constant step.
#[pyfunction]
#[pyo3(signature = (grad, x1, steps, schedule, radius = 1.0))]
fn run_sgd_ball(
    grad: Bound<'_, PyAny>,
    x1: Vec<f64>,
    steps: usize,
    schedule: Bound<'_, PyAny>,
    radius: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let schedule = if let Ok(eta) = schedule.extract::<f64>() {
        StepSchedule::constant(eta, steps)
    } else {
        match schedule.extract::<String>()?.as_str() {
            "1/t" => StepSchedule::inverse_t(steps),
            "1/sqrt(t)" => StepSchedule::inverse_sqrt_t(steps),
            "1/sqrt(T)" => StepSchedule::fixed_inverse_sqrt(steps),
            other => return Err(PyValueError::new_err(format!("unknown schedule `{other}`"))),
        }
    }
    .map_err(py_err)?;
    let set = FeasibleSet::ball(radius, x1.len()).map_err(py_err)?;
    let mut oracle = PyOracle { grad, dim: x1.len(), error: None };
    match run_sgd(&mut oracle, &set, &schedule, &x1, steps, 0) {
        Ok(trace) => Ok(trace.iterates),
        Err(e) => Err(oracle.error.take().unwrap_or_else(|| py_err(e))),
    }
}

#[pymodule]
#[pyo3(name = "final_iterate")]
fn final_iterate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(stationary, m)?)?;
    m.add_function(wrap_pyfunction!(walk, m)?)?;
    m.add_function(wrap_pyfunction!(run_sgd_ball, m)?)?;
    m.add_class::<PyAdversarial>()?;
    m.add_class::<PyNearlyLinear>()?;
    Ok(())
}
