//! Python bindings: chains, spectral measures, variance, sampling, the
//! martingale decomposition and the limit-theorem checks.
//!
//! Observables are plain lists and must already be centered; use
//! `Chain.center` to project a raw vector. Reports come back as dicts.

use nalgebra::DVector;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;

use rclt_core::chain::{matrix_from_rows, matrix_to_rows};
use rclt_core::sampling::sample_trajectory_stream;
use rclt_core::{
    asymptotic_variance_poisson, build_chain, build_metropolis, build_random_walk, clt_test,
    decompose_trajectory, fclt_profile, maximal_inequality_check, project_mean_zero,
    spectral_measure, uniform_integrability_diagnostic, variance_report, ChainFile, MaximalMethod,
    MaximalMode, Observable, ReversibleChain,
};

create_exception!(
    rclt,
    RcltError,
    PyValueError,
    "Raised for rclt numerical and input errors."
);

fn err(e: rclt_core::Error) -> PyErr {
    RcltError::new_err(e.to_string())
}

/// Serialize through JSON into plain Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| RcltError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A certified finite reversible Markov chain.
#[pyclass(module = "rclt", frozen)]
pub struct Chain {
    inner: ReversibleChain,
}

impl Chain {
    fn observable(&self, f: Vec<f64>) -> PyResult<Observable> {
        Observable::new(DVector::from_vec(f), &self.inner).map_err(err)
    }
}

#[pymethods]
impl Chain {
    /// Build from a row-stochastic kernel.
    #[new]
    fn new(kernel: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = matrix_from_rows(&kernel).map_err(err)?;
        Ok(Self {
            inner: build_chain(&m).map_err(err)?,
        })
    }

    /// Random walk on a weighted undirected graph.
    #[staticmethod]
    fn random_walk(weights: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = matrix_from_rows(&weights).map_err(err)?;
        Ok(Self {
            inner: build_random_walk(&m).map_err(err)?,
        })
    }

    #[staticmethod]
    fn metropolis(target: Vec<f64>, proposal: Vec<Vec<f64>>) -> PyResult<Self> {
        let m = matrix_from_rows(&proposal).map_err(err)?;
        Ok(Self {
            inner: build_metropolis(&target, &m).map_err(err)?,
        })
    }

    /// Parse a chain file; returns `(chain, observable or None)`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<(Self, Option<Vec<f64>>)> {
        let file = ChainFile::from_json(text).map_err(err)?;
        let inner = file.build().map_err(err)?;
        Ok((Self { inner }, file.observable))
    }

    #[pyo3(signature = (f=None))]
    fn to_json(&self, f: Option<Vec<f64>>) -> PyResult<String> {
        let f = f.map(|v| self.observable(v)).transpose()?;
        Ok(ChainFile::from_chain(&self.inner, f.as_ref()).to_json())
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn kernel(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.kernel())
    }

    #[getter]
    fn stationary(&self) -> Vec<f64> {
        self.inner.stationary().iter().copied().collect()
    }

    fn eigenvalues(&self) -> PyResult<Vec<f64>> {
        self.inner.eigenvalues().map_err(err)
    }

    fn absolute_spectral_gap(&self) -> PyResult<f64> {
        self.inner.absolute_spectral_gap().map_err(err)
    }

    fn detailed_balance_residual(&self) -> f64 {
        self.inner.detailed_balance_residual()
    }

    /// Subtract the stationary mean from `raw`.
    fn center(&self, raw: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = project_mean_zero(&raw, &self.inner).map_err(err)?;
        Ok(f.values().iter().copied().collect())
    }

    fn __repr__(&self) -> String {
        format!("Chain(n_states={})", self.inner.n_states())
    }
}

/// Atoms `(lambda, weight)` of the spectral measure of `f`.
#[pyfunction]
fn spectral_atoms(chain: &Chain, f: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
    let f = chain.observable(f)?;
    let rho = spectral_measure(&chain.inner, &f).map_err(err)?;
    Ok(rho.atoms.iter().map(|a| (a.lambda, a.weight)).collect())
}

/// `σ²` from the spectral measure.
#[pyfunction]
fn asymptotic_variance(chain: &Chain, f: Vec<f64>) -> PyResult<f64> {
    let f = chain.observable(f)?;
    spectral_measure(&chain.inner, &f)
        .and_then(|rho| rho.asymptotic_variance())
        .map_err(err)
}

/// `σ²` from the Poisson equation.
#[pyfunction]
fn asymptotic_variance_from_poisson(chain: &Chain, f: Vec<f64>) -> PyResult<f64> {
    let f = chain.observable(f)?;
    asymptotic_variance_poisson(&chain.inner, &f).map_err(err)
}

#[pyfunction]
fn variance<'py>(
    py: Python<'py>,
    chain: &Chain,
    f: Vec<f64>,
    n_max: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let f = chain.observable(f)?;
    let report = variance_report(&chain.inner, &f, n_max).map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (chain, f, length, seed, stream=0))]
fn sample_trajectory<'py>(
    py: Python<'py>,
    chain: &Chain,
    f: Vec<f64>,
    length: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = chain.observable(f)?;
    let traj = sample_trajectory_stream(&chain.inner, &f, length, seed, stream).map_err(err)?;
    to_py(py, &traj)
}

/// Sample a path and return every decomposition sequence.
#[pyfunction]
#[pyo3(signature = (chain, f, length, horizon, seed, stream=0))]
fn decompose<'py>(
    py: Python<'py>,
    chain: &Chain,
    f: Vec<f64>,
    length: usize,
    horizon: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = chain.observable(f)?;
    let traj = sample_trajectory_stream(&chain.inner, &f, length, seed, stream).map_err(err)?;
    let terms = decompose_trajectory(&chain.inner, &f, &traj, horizon).map_err(err)?;
    let out = to_py(py, &terms)?;
    let dict = out.cast::<PyDict>()?;
    dict.set_item("max_residual_xk1", terms.max_residual_xk1())?;
    dict.set_item("max_residual_martdec", terms.max_residual_martdec())?;
    Ok(out)
}

#[pyfunction]
fn clt<'py>(
    py: Python<'py>,
    chain: &Chain,
    f: Vec<f64>,
    n: usize,
    replicas: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = chain.observable(f)?;
    let report = py
        .detach(|| clt_test(&chain.inner, &f, n, replicas, seed))
        .map_err(err)?;
    let out = to_py(py, &report)?;
    out.cast::<PyDict>()?
        .set_item("standardized", report.standardized)?;
    Ok(out)
}

#[pyfunction]
fn fclt<'py>(
    py: Python<'py>,
    chain: &Chain,
    f: Vec<f64>,
    n: usize,
    replicas: usize,
    grid: Vec<f64>,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = chain.observable(f)?;
    let report = py
        .detach(|| fclt_profile(&chain.inner, &f, n, replicas, &grid, seed))
        .map_err(err)?;
    to_py(py, &report)
}

/// Maximal inequality check; `replicas=None` enumerates every path.
#[pyfunction]
#[pyo3(signature = (chain, f, n, lambdas, mode="forward", replicas=None, seed=0, two_sided=false))]
#[allow(clippy::too_many_arguments)]
fn maximal<'py>(
    py: Python<'py>,
    chain: &Chain,
    f: Vec<f64>,
    n: usize,
    lambdas: Vec<f64>,
    mode: &str,
    replicas: Option<usize>,
    seed: u64,
    two_sided: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let f = chain.observable(f)?;
    let mode = match mode {
        "forward" => MaximalMode::Forward,
        "reversed" => MaximalMode::Reversed,
        other => {
            return Err(RcltError::new_err(format!(
                "mode must be \"forward\" or \"reversed\", got {other:?}"
            )))
        }
    };
    let method = match replicas {
        None => MaximalMethod::Exhaustive,
        Some(replicas) => MaximalMethod::MonteCarlo { replicas, seed },
    };
    let report = py
        .detach(|| maximal_inequality_check(&chain.inner, &f, n, &lambdas, mode, method, two_sided))
        .map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn ui_diagnostic<'py>(
    py: Python<'py>,
    chain: &Chain,
    f: Vec<f64>,
    n_list: Vec<usize>,
    thresholds: Vec<f64>,
    replicas: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let f = chain.observable(f)?;
    let report = py
        .detach(|| {
            uniform_integrability_diagnostic(&chain.inner, &f, &n_list, &thresholds, replicas, seed)
        })
        .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
pub fn rclt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RcltError", m.py().get_type::<RcltError>())?;
    m.add_class::<Chain>()?;
    m.add_function(wrap_pyfunction!(spectral_atoms, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_variance, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_variance_from_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(sample_trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(clt, m)?)?;
    m.add_function(wrap_pyfunction!(fclt, m)?)?;
    m.add_function(wrap_pyfunction!(maximal, m)?)?;
    m.add_function(wrap_pyfunction!(ui_diagnostic, m)?)?;
    Ok(())
}
