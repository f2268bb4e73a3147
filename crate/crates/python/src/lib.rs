//! Python bindings. Spectra cross the boundary as lists of probabilities
//! (length `2^t`); structured results come back as plain dicts.

use std::path::PathBuf;

use order_recovery::analysis::{analyze as run_analysis, samples_from_records, AnalysisConfig};
use order_recovery::dataset::{generate_sweep, load_dataset, save_dataset, SweepConfig};
use order_recovery::features::features_from_decode;
use order_recovery::{mlkit, numtheory, spectrum};
use order_recovery::{Error, KernelFamily, NoiseConfig, Sector, Spectrum};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn spectrum_from(probs: Vec<f64>) -> PyResult<Spectrum> {
    let q = probs.len();
    if q < 2 || !q.is_power_of_two() {
        return Err(PyValueError::new_err(format!(
            "spectrum length must be a power of two >= 2, got {q}"
        )));
    }
    Spectrum::new(q.trailing_zeros(), probs).map_err(py_err)
}

/// Problem instance `(N, a, t)` with its true order.
#[pyclass(name = "Instance", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
pub struct PyInstance(order_recovery::Instance);

#[pymethods]
impl PyInstance {
    #[new]
    fn new(n: u64, a: u64, t: u32) -> PyResult<Self> {
        order_recovery::Instance::new(n, a, t)
            .map(PyInstance)
            .map_err(py_err)
    }

    #[getter(N)]
    fn modulus(&self) -> u64 {
        self.0.modulus()
    }

    #[getter]
    fn a(&self) -> u64 {
        self.0.base()
    }

    #[getter]
    fn t(&self) -> u32 {
        self.0.precision()
    }

    #[getter(Q)]
    fn q(&self) -> u64 {
        self.0.q()
    }

    #[getter]
    fn order(&self) -> u64 {
        self.0.order()
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.0.is_degenerate()
    }

    /// `a^k = 1 (mod N)`.
    fn verifies(&self, k: u64) -> bool {
        self.0.verifies(k)
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(N={}, a={}, t={})",
            self.0.modulus(),
            self.0.base(),
            self.0.precision()
        )
    }
}

#[pyfunction]
fn multiplicative_order(a: u64, n: u64) -> PyResult<u64> {
    numtheory::multiplicative_order(a, n).map_err(py_err)
}

/// Convergents of `y / q` as `(numerator, denominator)` pairs.
#[pyfunction]
fn convergents(y: u64, q: u64) -> PyResult<Vec<(u64, u64)>> {
    if q == 0 || y >= q {
        return Err(PyValueError::new_err(format!(
            "need 0 <= y < q, got y={y}, q={q}"
        )));
    }
    Ok(numtheory::convergents(y, q)
        .into_iter()
        .map(|c| (c.numerator, c.denominator))
        .collect())
}

#[pyfunction]
fn ideal_spectrum(instance: PyInstance) -> Vec<f64> {
    spectrum::ideal_spectrum(&instance.0).probs().to_vec()
}

/// Noise mixture; with `shots`, the empirical distribution of that many
/// seeded draws. `sectors` is a list of `(h, nu, sigma)`; when omitted and
/// `epsilon > 0`, every other shift is used with equal weight and width
/// `sigma0`.
#[pyfunction]
#[pyo3(signature = (instance, epsilon=0.0, sigma0=0.0, lam=0.0, sectors=None, kernel="gaussian", shots=None, seed=0))]
#[allow(clippy::too_many_arguments)]
fn noisy_spectrum(
    instance: PyInstance,
    epsilon: f64,
    sigma0: f64,
    lam: f64,
    sectors: Option<Vec<(u32, f64, f64)>>,
    kernel: &str,
    shots: Option<u64>,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let kernel = match kernel {
        "gaussian" => KernelFamily::Gaussian,
        "box" => KernelFamily::Box,
        other => return Err(PyValueError::new_err(format!("unknown kernel {other:?}"))),
    };
    let sectors = match sectors {
        Some(s) => s
            .into_iter()
            .map(|(h, nu, sigma)| Sector { h, nu, sigma })
            .collect(),
        None if epsilon > 0.0 => spectrum::default_sectors(&instance.0, sigma0).map_err(py_err)?,
        None => Vec::new(),
    };
    let cfg = NoiseConfig {
        epsilon,
        sectors,
        sigma0,
        lambda_uniform: lam,
        kernel,
        shots,
        seed,
    };
    let exact = spectrum::noisy_mixture(&instance.0, &cfg).map_err(py_err)?;
    let spec = match shots {
        Some(n) => spectrum::sample_shots(&exact, n, seed).map_err(py_err)?,
        None => exact,
    };
    Ok(spec.probs().to_vec())
}

/// Multinomial histogram of `shots` seeded draws.
#[pyfunction]
fn sample_counts(probs: Vec<f64>, shots: u64, seed: u64) -> PyResult<Vec<u64>> {
    let spec = spectrum_from(probs)?;
    spectrum::sample_counts(&spec, shots, seed)
        .map(|c| c.counts().to_vec())
        .map_err(py_err)
}

/// Decoder output: `r_calc`, `M_ver`, `M1`, `M2`, `masses`, `recoverable`.
#[pyfunction]
fn decode<'py>(
    py: Python<'py>,
    probs: Vec<f64>,
    instance: PyInstance,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = spectrum_from(probs)?;
    let result = order_recovery::decode(&spec, &instance.0).map_err(py_err)?;
    let out = to_py(py, &result)?;
    out.set_item(
        "recoverable",
        order_recovery::is_recoverable(&result, instance.0.order()),
    )?;
    Ok(out)
}

/// The four recoverability features as a dict.
#[pyfunction]
fn feature_vector<'py>(
    py: Python<'py>,
    probs: Vec<f64>,
    instance: PyInstance,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = spectrum_from(probs)?;
    let decoded = order_recovery::decode(&spec, &instance.0).map_err(py_err)?;
    to_py(py, &features_from_decode(&spec, &decoded))
}

#[pyfunction]
fn auroc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    mlkit::auroc(&scores, &labels).map_err(py_err)
}

/// Runs a sweep (TOML config text, or the default grid) and writes the
/// dataset file. Returns the number of records.
#[pyfunction]
#[pyo3(signature = (path, config=None))]
fn generate_dataset(py: Python<'_>, path: PathBuf, config: Option<&str>) -> PyResult<usize> {
    let cfg = match config {
        Some(text) => SweepConfig::from_toml(text).map_err(py_err)?,
        None => SweepConfig::default(),
    };
    py.detach(|| {
        let records = generate_sweep(&cfg)?;
        save_dataset(&records, &path)?;
        Ok(records.len())
    })
    .map_err(py_err)
}

/// Feature rows and recoverability labels of a dataset file.
#[pyfunction]
fn load_features(path: PathBuf) -> PyResult<(Vec<Vec<f64>>, Vec<bool>)> {
    let records = load_dataset(&path).map_err(py_err)?;
    Ok(samples_from_records(&records)
        .into_iter()
        .map(|s| (s.features, s.label))
        .unzip())
}

/// Full analysis report of a dataset file, as a dict.
#[pyfunction]
#[pyo3(signature = (path, seed=0, k=5, n_trees=200, perm_repeats=10))]
fn analyze<'py>(
    py: Python<'py>,
    path: PathBuf,
    seed: u64,
    k: usize,
    n_trees: usize,
    perm_repeats: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = AnalysisConfig {
        k,
        seed,
        perm_repeats,
        ..AnalysisConfig::default()
    };
    cfg.forest.n_trees = n_trees;
    cfg.forest.seed = seed;
    let report = py
        .detach(|| run_analysis(&load_dataset(&path)?, &cfg))
        .map_err(py_err)?;
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "order_recovery")]
pub fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(multiplicative_order, m)?)?;
    m.add_function(wrap_pyfunction!(convergents, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(sample_counts, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(feature_vector, m)?)?;
    m.add_function(wrap_pyfunction!(auroc, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(load_features, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
