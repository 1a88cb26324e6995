use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use weylchamber::chamber::DriftSpec;
use weylchamber::roots::{RootKind, RootSystem};
use weylchamber::sim::SimConfig;
use weylchamber::toda::TodaParams;
use weylchamber::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Pole(_) => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn build(kind: &str) -> PyResult<RootSystem> {
    let k: RootKind = kind.parse().map_err(to_py)?;
    RootSystem::build(k).map_err(to_py)
}

fn drift(kind: &str, nu: Option<Vec<f64>>) -> PyResult<DriftSpec> {
    let rs = build(kind)?;
    let nu = match nu {
        Some(c) => rs.from_root_coefficients(&c),
        None => rs.rho.clone(),
    };
    DriftSpec::new(rs, nu).map_err(to_py)
}

fn sim_config(n: usize, seed: u64, dt: f64) -> SimConfig {
    SimConfig { dt, t_max: 1e4, n_samples: n, seed, ..Default::default() }
}

/// Root system with its Weyl group. Vectors are Euclidean coordinates.
#[pyclass(name = "RootSystem", module = "weylchamber_py")]
struct PyRootSystem {
    inner: RootSystem,
}

#[pymethods]
impl PyRootSystem {
    #[new]
    fn new(kind: &str) -> PyResult<Self> {
        Ok(PyRootSystem { inner: build(kind)? })
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind.to_string()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank
    }

    #[getter]
    fn simple_roots(&self) -> Vec<Vec<f64>> {
        self.inner.simple_roots.clone()
    }

    #[getter]
    fn coroots(&self) -> Vec<Vec<f64>> {
        self.inner.coroots.clone()
    }

    #[getter]
    fn weights(&self) -> Vec<Vec<f64>> {
        self.inner.weights.clone()
    }

    #[getter]
    fn coweights(&self) -> Vec<Vec<f64>> {
        self.inner.coweights.clone()
    }

    #[getter]
    fn positive_roots(&self) -> Vec<Vec<f64>> {
        self.inner.positive_roots.clone()
    }

    #[getter]
    fn cartan(&self) -> Vec<Vec<f64>> {
        self.inner.cartan.clone()
    }

    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.inner.rho.clone()
    }

    #[getter]
    fn rho_vee(&self) -> Vec<f64> {
        self.inner.rho_vee.clone()
    }

    fn weyl_order(&self) -> usize {
        self.inner.weyl().order()
    }

    /// (word, length, signature, matrix) per group element.
    fn weyl_elements(&self) -> Vec<(String, usize, i32, Vec<Vec<f64>>)> {
        self.inner
            .weyl()
            .elements
            .iter()
            .map(|e| (e.label(), e.length, e.signature, e.matrix.clone()))
            .collect()
    }

    /// <x, e_i> for each simple root.
    fn pairings(&self, x: Vec<f64>) -> Vec<f64> {
        self.inner.pairings(&x)
    }

    fn from_pairings(&self, c: Vec<f64>) -> Vec<f64> {
        self.inner.from_pairings(&c)
    }

    fn in_chamber(&self, x: Vec<f64>) -> bool {
        self.inner.in_chamber(&x)
    }

    fn __repr__(&self) -> String {
        format!("RootSystem({}, rank={})", self.inner.kind, self.inner.rank)
    }
}

#[pyfunction]
fn special_l(x: f64) -> PyResult<f64> {
    weylchamber::special::special_l(x).map_err(to_py)
}

/// P(<M, e_i> >= m_i for all i), drift in simple-root coefficients (default rho).
#[pyfunction]
#[pyo3(signature = (kind, m, nu=None))]
fn min_law_survival(kind: &str, m: Vec<f64>, nu: Option<Vec<f64>>) -> PyResult<f64> {
    Ok(drift(kind, nu)?.min_law_survival(&m))
}

/// Killed transition density from x to y at time t; m is the killing level (Euclidean).
#[pyfunction]
#[pyo3(signature = (kind, m, t, x, y, nu=None))]
fn killed_kernel(kind: &str, m: Vec<f64>, t: f64, x: Vec<f64>, y: Vec<f64>, nu: Option<Vec<f64>>) -> PyResult<f64> {
    drift(kind, nu)?.killed_kernel(&m, t, &x, &y).map_err(to_py)
}

/// Exact probability that the h-process from x exits through wall i (rank 2).
#[pyfunction]
#[pyo3(signature = (kind, x, wall, nu=None))]
fn exit_wall_prob(kind: &str, x: Vec<f64>, wall: usize, nu: Option<Vec<f64>>) -> PyResult<f64> {
    Ok(drift(kind, nu)?.exit_wall_prob(&x, wall).map_err(to_py)?.exact)
}

/// Monte Carlo (mean, stderr) of the exit-wall frequencies.
#[pyfunction]
#[pyo3(signature = (kind, x, n=10_000, seed=0, dt=1e-3, nu=None))]
fn exit_wall_mc(kind: &str, x: Vec<f64>, n: usize, seed: u64, dt: f64, nu: Option<Vec<f64>>) -> PyResult<Vec<(f64, f64)>> {
    let d = drift(kind, nu)?;
    let cfg = SimConfig { t_max: 200.0, ..sim_config(n, seed, dt) };
    let est = weylchamber::sim::exit_wall_mc(&d, &x, &cfg).map_err(to_py)?;
    Ok(est.into_iter().map(|e| (e.mean, e.stderr)).collect())
}

/// Whittaker function by its convergent series (any spectral parameter away from poles).
#[pyfunction]
fn whittaker_series(kind: &str, mu: Vec<f64>, x: Vec<f64>) -> PyResult<f64> {
    weylchamber::whittaker::whittaker_series(&build(kind)?, &mu, &x).map_err(to_py)
}

/// Whittaker function by Monte Carlo, mu in the open chamber: (mean, stderr).
#[pyfunction]
#[pyo3(signature = (kind, mu, x, n=10_000, seed=0, dt=1e-3))]
fn whittaker_mc(kind: &str, mu: Vec<f64>, x: Vec<f64>, n: usize, seed: u64, dt: f64) -> PyResult<(f64, f64)> {
    let rs = build(kind)?;
    let e = weylchamber::whittaker::whittaker_mc_many(&rs, &mu, &[x], &sim_config(n, seed, dt)).map_err(to_py)?;
    Ok((e[0].mean, e[0].stderr))
}

/// MC estimate of E[(int_0^inf e^{-B_t - mu t} dt)^p] and its closed form.
#[pyfunction]
#[pyo3(signature = (mu, p, n=10_000, seed=0, dt=1e-3))]
fn exp_functional_moment(mu: f64, p: f64, n: usize, seed: u64, dt: f64) -> PyResult<(f64, f64, f64)> {
    let r = weylchamber::sim::estimate_exp_functional(mu, p, &sim_config(n, seed, dt)).map_err(to_py)?;
    Ok((r.estimate.mean, r.estimate.stderr, r.closed_form))
}

fn toda(kind: &str, gamma: f64, mu: Option<Vec<f64>>) -> PyResult<TodaParams> {
    let rs = build(kind)?;
    let mu = mu.unwrap_or_else(|| vec![1.0; rs.rank]);
    TodaParams::new(rs, gamma, mu).map_err(to_py)
}

/// Background charge Q.
#[pyfunction]
fn background_charge(kind: &str, gamma: f64) -> PyResult<Vec<f64>> {
    Ok(toda(kind, gamma, None)?.q)
}

/// Reflection coefficient R_s(alpha); s is a reduced word of 0-based simple reflections.
#[pyfunction]
#[pyo3(signature = (kind, gamma, alpha, word, mu=None))]
fn refl_coeff(kind: &str, gamma: f64, alpha: Vec<f64>, word: Vec<usize>, mu: Option<Vec<f64>>) -> PyResult<f64> {
    let tp = toda(kind, gamma, mu)?;
    if word.iter().any(|&i| i >= tp.rs.rank) {
        return Err(PyValueError::new_err("word letters must be below the rank"));
    }
    let s = tp.rs.weyl().from_word(&word);
    weylchamber::toda::refl_coeff(&tp, s, &alpha).map_err(to_py)
}

/// Rank-one reflection coefficient in the Q = gamma/2 + 2/gamma normalization.
#[pyfunction]
fn liouville_refl(gamma: f64, mu: f64, a: f64) -> PyResult<f64> {
    weylchamber::toda::liouville_refl(gamma, mu, a).map_err(to_py)
}

/// Run one acceptance criterion: (passed, detail lines, seconds).
#[pyfunction]
#[pyo3(signature = (criterion, seed=0))]
fn acceptance(py: Python<'_>, criterion: u8, seed: u64) -> PyResult<(bool, Vec<String>, f64)> {
    let r = py
        .detach(|| weylchamber::acceptance::run_criterion(criterion, seed))
        .map_err(to_py)?;
    Ok((r.passed, r.details, r.seconds))
}

/// Run the command-line driver with the given arguments (without the program name).
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let mut argv = vec!["weylchamber".to_string()];
    argv.extend(args);
    py.detach(|| weylchamber::cli::run(argv))
}

#[pymodule]
fn weylchamber_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRootSystem>()?;
    m.add_function(wrap_pyfunction!(special_l, m)?)?;
    m.add_function(wrap_pyfunction!(min_law_survival, m)?)?;
    m.add_function(wrap_pyfunction!(killed_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(exit_wall_prob, m)?)?;
    m.add_function(wrap_pyfunction!(exit_wall_mc, m)?)?;
    m.add_function(wrap_pyfunction!(whittaker_series, m)?)?;
    m.add_function(wrap_pyfunction!(whittaker_mc, m)?)?;
    m.add_function(wrap_pyfunction!(exp_functional_moment, m)?)?;
    m.add_function(wrap_pyfunction!(background_charge, m)?)?;
    m.add_function(wrap_pyfunction!(refl_coeff, m)?)?;
    m.add_function(wrap_pyfunction!(liouville_refl, m)?)?;
    m.add_function(wrap_pyfunction!(acceptance, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
