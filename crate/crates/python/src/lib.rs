//! Python bindings: impulse-response analysis, augmentation, level
//! measures, evaluation and dataset synthesis.

use std::path::PathBuf;

use airforge_core::dataset::{self, Manifest, PipelineConfig};
use airforge_core::eval::ReportFormat;
use airforge_core::levels::LevelMethod;
use airforge_core::{Error, Result as CoreResult};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(airforge, AirForgeError, PyException);
create_exception!(airforge, NumericError, AirForgeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(msg) => PyValueError::new_err(msg),
        e if e.is_numeric() => NumericError::new_err(e.to_string()),
        e => AirForgeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for CoreResult<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// A mono impulse response or audio signal.
#[pyclass(name = "Air", module = "airforge")]
#[derive(Clone)]
struct PyAir {
    inner: airforge_core::Air,
}

#[pymethods]
impl PyAir {
    #[new]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        Ok(PyAir {
            inner: airforge_core::Air::new(samples, sample_rate).py_err()?,
        })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(PyAir {
            inner: airforge_core::wav::read_wav(path).py_err()?,
        })
    }

    /// Synthetic exponentially decaying response with the given T60 and DRR.
    #[staticmethod]
    #[pyo3(signature = (t60, drr, sample_rate = 16_000, seed = 0))]
    fn synthetic(t60: f64, drr: f64, sample_rate: u32, seed: u64) -> Self {
        PyAir {
            inner: airforge_core::synth::SyntheticAir::new(t60, drr, sample_rate).generate(seed),
        }
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        airforge_core::wav::write_wav(path, &self.inner).py_err()
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn direct_path(&self) -> PyResult<usize> {
        airforge_core::find_direct_path(&self.inner).py_err()
    }

    fn drr(&self) -> PyResult<f64> {
        airforge_core::drr_of(&self.inner).py_err()
    }

    fn t60(&self, py: Python<'_>) -> PyResult<f64> {
        py.allow_threads(|| airforge_core::estimate_t60(&self.inner)).py_err()
    }

    fn decay(&self, py: Python<'_>) -> PyResult<DecayModel> {
        let fit = py.allow_threads(|| airforge_core::estimate_decay(&self.inner)).py_err()?;
        Ok(DecayModel {
            inner: fit.model,
            rms_error_db: fit.rms_error_db,
        })
    }

    /// Level in dB; `method` is "p56", "rms" or "lufs".
    #[pyo3(signature = (method = "p56"))]
    fn level(&self, method: &str) -> PyResult<f64> {
        let method = match method {
            "p56" => LevelMethod::P56Active,
            "rms" => LevelMethod::Rms,
            "lufs" => LevelMethod::LufsIntegrated,
            other => return Err(PyValueError::new_err(format!("unknown level method {other:?}"))),
        };
        Ok(airforge_core::levels::measure(&self.inner, method).py_err()?.value)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Air({} samples at {} Hz)",
            self.inner.len(),
            self.inner.sample_rate()
        )
    }
}

#[pyclass(frozen, module = "airforge")]
struct DecayModel {
    inner: airforge_core::DecayModel,
    #[pyo3(get)]
    rms_error_db: f64,
}

#[pymethods]
impl DecayModel {
    #[getter]
    fn level(&self) -> f64 {
        self.inner.level
    }
    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }
    #[getter]
    fn noise_floor(&self) -> f64 {
        self.inner.noise_floor
    }
    #[getter]
    fn onset(&self) -> f64 {
        self.inner.onset
    }
    #[getter]
    fn t60(&self) -> f64 {
        self.inner.t60()
    }

    fn __repr__(&self) -> String {
        format!(
            "DecayModel(level={}, tau={}, noise_floor={}, onset={})",
            self.inner.level, self.inner.tau, self.inner.noise_floor, self.inner.onset
        )
    }
}

#[pyclass(frozen, get_all, module = "airforge")]
struct AugmentReport {
    target_t60: Option<f64>,
    target_drr: Option<f64>,
    seed: u64,
    achieved_t60: Option<f64>,
    achieved_drr: f64,
    alpha: f64,
    clipped: bool,
}

impl From<airforge_core::AugmentReport> for AugmentReport {
    fn from(r: airforge_core::AugmentReport) -> Self {
        AugmentReport {
            target_t60: r.requested.target_t60,
            target_drr: r.requested.target_drr,
            seed: r.requested.seed,
            achieved_t60: r.achieved_t60,
            achieved_drr: r.achieved_drr,
            alpha: r.alpha,
            clipped: r.clipped,
        }
    }
}

#[pymethods]
impl AugmentReport {
    fn __repr__(&self) -> String {
        format!(
            "AugmentReport(achieved_t60={:?}, achieved_drr={}, alpha={}, clipped={})",
            self.achieved_t60, self.achieved_drr, self.alpha, self.clipped
        )
    }
}

/// Retarget T60 and/or DRR. Returns the new response and a report.
#[pyfunction]
#[pyo3(signature = (air, t60 = None, drr = None, seed = 0))]
fn augment(
    py: Python<'_>,
    air: &PyAir,
    t60: Option<f64>,
    drr: Option<f64>,
    seed: u64,
) -> PyResult<(PyAir, AugmentReport)> {
    let spec = airforge_core::AugmentSpec {
        target_t60: t60,
        target_drr: drr,
        seed,
    };
    let (out, report) = py.allow_threads(|| airforge_core::augment(&air.inner, &spec)).py_err()?;
    Ok((PyAir { inner: out }, report.into()))
}

#[pyclass(frozen, get_all, module = "airforge")]
struct EvalStats {
    bias: f64,
    mse: f64,
    pearson: Option<f64>,
    n: usize,
}

#[pymethods]
impl EvalStats {
    /// Render as "text", "json" or "csv".
    #[pyo3(signature = (method = "estimator", format = "text"))]
    fn report(&self, method: &str, format: &str) -> PyResult<String> {
        let format: ReportFormat = format.parse().py_err()?;
        let stats = airforge_core::EvalStats {
            bias: self.bias,
            mse: self.mse,
            pearson: self.pearson,
            n: self.n,
        };
        Ok(airforge_core::eval::report(method, &stats, format))
    }

    fn __repr__(&self) -> String {
        format!(
            "EvalStats(bias={}, mse={}, pearson={:?}, n={})",
            self.bias, self.mse, self.pearson, self.n
        )
    }
}

#[pyfunction]
fn evaluate(estimates: Vec<f64>, labels: Vec<f64>) -> PyResult<EvalStats> {
    let s = airforge_core::evaluate(&estimates, &labels).py_err()?;
    Ok(EvalStats {
        bias: s.bias,
        mse: s.mse,
        pearson: s.pearson,
        n: s.n,
    })
}

/// Least-squares (slope, intercept) mapping estimates onto labels.
#[pyfunction]
fn fit_calibration(estimates: Vec<f64>, labels: Vec<f64>) -> PyResult<(f64, f64)> {
    let c = dataset::fit_calibration(&estimates, &labels).py_err()?;
    Ok((c.slope, c.intercept))
}

/// Build a dataset from a JSON config document; returns the row count.
#[pyfunction]
fn build_dataset(py: Python<'_>, config_json: &str, out: PathBuf) -> PyResult<usize> {
    let config = PipelineConfig::from_json(config_json).py_err()?;
    let manifest = py.allow_threads(|| dataset::build_dataset(&config, &out)).py_err()?;
    Ok(manifest.rows.len())
}

/// Regenerate one manifest row's mixture from its recipe.
#[pyfunction]
fn regenerate_row(py: Python<'_>, dataset_dir: PathBuf, row: usize) -> PyResult<PyAir> {
    let manifest = Manifest::read(&dataset_dir).py_err()?;
    let entry = manifest
        .rows
        .into_iter()
        .find(|r| r.row == row)
        .ok_or_else(|| AirForgeError::new_err(format!("row {row} not in manifest")))?;
    let air = py
        .allow_threads(|| dataset::regenerate_row(&dataset_dir, &entry))
        .py_err()?;
    Ok(PyAir { inner: air })
}

#[pymodule]
fn airforge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AirForgeError", m.py().get_type_bound::<AirForgeError>())?;
    m.add("NumericError", m.py().get_type_bound::<NumericError>())?;
    m.add_class::<PyAir>()?;
    m.add_class::<DecayModel>()?;
    m.add_class::<AugmentReport>()?;
    m.add_class::<EvalStats>()?;
    m.add_function(wrap_pyfunction!(augment, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_calibration, m)?)?;
    m.add_function(wrap_pyfunction!(build_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(regenerate_row, m)?)?;
    Ok(())
}
