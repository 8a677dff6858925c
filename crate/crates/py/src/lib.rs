//! Python module `coinforge`.

pub mod api;

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use coinforge::diffusion::{DiffusionSpec, ExactDraw};
use coinforge::factory;
use coinforge::harness::{self, stats};
use coinforge::{CoinResult, Error, Role};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Parse { .. } | Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "UniformSource", module = "coinforge")]
struct PyUniformSource {
    inner: coinforge::UniformSource,
}

#[pymethods]
impl PyUniformSource {
    #[new]
    #[pyo3(signature = (seed, stream = 0))]
    fn new(seed: u64, stream: u64) -> Self {
        Self {
            inner: coinforge::UniformSource::with_stream(seed, stream),
        }
    }

    /// Source for one replication and role (`decision`, `coin`, `auxiliary`).
    #[staticmethod]
    fn split(seed: u64, replication: u64, role: &str) -> PyResult<Self> {
        let role: Role = api::parse_role(role).map_err(py_err)?;
        Ok(Self {
            inner: coinforge::UniformSource::split(seed, replication, role),
        })
    }

    fn next_uniform(&mut self) -> f64 {
        self.inner.next_uniform()
    }

    fn next_normal(&mut self) -> f64 {
        self.inner.next_normal()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    #[getter]
    fn counter(&self) -> u64 {
        self.inner.counter()
    }
}

#[pyclass(
    name = "CoinResult",
    module = "coinforge",
    frozen,
    get_all,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyCoinResult {
    value: bool,
    iterations: u64,
    coins_consumed: u64,
    uniforms_consumed: u64,
}

impl From<CoinResult> for PyCoinResult {
    fn from(r: CoinResult) -> Self {
        Self {
            value: r.value,
            iterations: r.iterations,
            coins_consumed: r.coins_consumed,
            uniforms_consumed: r.uniforms_consumed,
        }
    }
}

#[pymethods]
impl PyCoinResult {
    fn __repr__(&self) -> String {
        format!(
            "CoinResult(value={}, iterations={}, coins_consumed={}, uniforms_consumed={})",
            if self.value { "True" } else { "False" },
            self.iterations,
            self.coins_consumed,
            self.uniforms_consumed
        )
    }
}

#[pyclass(
    name = "ExactDraw",
    module = "coinforge",
    frozen,
    get_all,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyExactDraw {
    value: f64,
    proposals: u64,
    endpoint_draws: u64,
    j_coins: u64,
    bridge_points: u64,
    segments: u64,
}

impl From<ExactDraw> for PyExactDraw {
    fn from(d: ExactDraw) -> Self {
        Self {
            value: d.value,
            proposals: d.proposals,
            endpoint_draws: d.endpoint_draws,
            j_coins: d.j_coins,
            bridge_points: d.bridge_points,
            segments: d.segments,
        }
    }
}

#[pymethods]
impl PyExactDraw {
    fn __repr__(&self) -> String {
        format!(
            "ExactDraw(value={}, proposals={}, j_coins={}, bridge_points={}, segments={})",
            self.value, self.proposals, self.j_coins, self.bridge_points, self.segments
        )
    }
}

/// Drift preset (`zero` or `sine`) on `[0, T]` started at `x`.
#[pyclass(name = "Diffusion", module = "coinforge", frozen)]
struct PyDiffusion {
    spec: DiffusionSpec,
}

#[pymethods]
impl PyDiffusion {
    #[new]
    #[pyo3(signature = (preset, x = 0.0, T = 1.0, ell = None, r = None))]
    #[allow(non_snake_case)]
    fn new(preset: &str, x: f64, T: f64, ell: Option<f64>, r: Option<f64>) -> PyResult<Self> {
        Ok(Self {
            spec: api::diffusion_spec(preset, x, T, ell, r).map_err(py_err)?,
        })
    }

    fn phi(&self, u: f64) -> PyResult<f64> {
        self.spec.phi(u).map_err(py_err)
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.spec.rate()
    }

    #[pyo3(signature = (seed, replication = 0, segment = false))]
    fn draw(&self, seed: u64, replication: u64, segment: bool) -> PyResult<PyExactDraw> {
        api::diffusion_draw(&self.spec, seed, replication, segment)
            .map(Into::into)
            .map_err(py_err)
    }

    #[pyo3(signature = (n, seed, segment = false))]
    fn sample(&self, n: u64, seed: u64, segment: bool) -> PyResult<Vec<f64>> {
        (0..n)
            .map(|i| api::diffusion_draw(&self.spec, seed, i, segment).map(|d| d.value))
            .collect::<coinforge::Result<_>>()
            .map_err(py_err)
    }

    #[pyo3(signature = (n, seed, step = 1e-4))]
    fn euler_maruyama(&self, n: usize, seed: u64, step: f64) -> PyResult<Vec<f64>> {
        harness::euler_maruyama_batch(&self.spec, self.spec.horizon, step, n, seed).map_err(py_err)
    }
}

#[pyfunction]
#[pyo3(signature = (a, p, seed, replication = 0))]
fn exp_coin(a: f64, p: f64, seed: u64, replication: u64) -> PyResult<PyCoinResult> {
    api::exp_coin_run(a, p, seed, replication)
        .map(Into::into)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (p, seed, replication = 0, envelope = "p2"))]
fn envelope_coin(p: f64, seed: u64, replication: u64, envelope: &str) -> PyResult<PyCoinResult> {
    api::envelope_coin_run(envelope, p, seed, replication)
        .map(Into::into)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (s, half_range, seed, replication = 0))]
fn two_point_estimate(s: f64, half_range: f64, seed: u64, replication: u64) -> PyResult<f64> {
    api::two_point_estimate(s, half_range, seed, replication).map_err(py_err)
}

#[pyfunction]
fn bernstein_eval(coefficients: Vec<f64>, p: f64) -> f64 {
    factory::bernstein_eval(&coefficients, p)
}

#[pyfunction]
fn hypergeom_condmean(row: Vec<f64>, n: u64, k: u64) -> PyResult<f64> {
    factory::hypergeom_condmean(&row, n, k).map_err(py_err)
}

/// Validation report of an envelope as a JSON string.
#[pyfunction]
#[pyo3(signature = (envelope, n_max = 64))]
fn validate_envelope(envelope: &str, n_max: u64) -> PyResult<String> {
    api::validate_envelope_json(envelope, n_max).map_err(py_err)
}

/// `(statistic, critical value)` of the two-sample KS test.
#[pyfunction]
#[pyo3(signature = (a, b, alpha = 0.01))]
fn ks_two_sample(a: Vec<f64>, b: Vec<f64>, alpha: f64) -> (f64, f64) {
    let r = stats::ks_two_sample(&a, &b, alpha);
    (r.statistic, r.critical)
}

#[pyfunction]
fn selftest(seed: u64) -> PyResult<String> {
    harness::selftest(seed)
        .and_then(|r| r.to_json())
        .map_err(py_err)
}

/// Runs `coin`, `validate-envelope`, `sde` or `selftest` with `key=value`
/// settings; returns `(report_json, exit_code)`.
#[pyfunction]
fn run_command(name: &str, settings: BTreeMap<String, String>) -> PyResult<(String, i32)> {
    api::run_command(name, &settings).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "coinforge")]
fn coinforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUniformSource>()?;
    m.add_class::<PyCoinResult>()?;
    m.add_class::<PyExactDraw>()?;
    m.add_class::<PyDiffusion>()?;
    m.add_function(wrap_pyfunction!(exp_coin, m)?)?;
    m.add_function(wrap_pyfunction!(envelope_coin, m)?)?;
    m.add_function(wrap_pyfunction!(two_point_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(bernstein_eval, m)?)?;
    m.add_function(wrap_pyfunction!(hypergeom_condmean, m)?)?;
    m.add_function(wrap_pyfunction!(validate_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
