//! Python bindings: waveforms, filters, processing chains, scenarios and
//! the fit, calibration, prediction, simulation and planning operations.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use vibcal_core as core;
use vibcal_core::{Error, Exact, WindowKind};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        Error::Trial { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn exact(obj: &Bound<'_, PyAny>) -> PyResult<Exact> {
    let text = obj.str()?.to_string();
    text.parse().map_err(to_py_err)
}

fn window_kind(name: &str) -> PyResult<WindowKind> {
    match name.to_ascii_lowercase().as_str() {
        "rect" | "rectangular" => Ok(WindowKind::Rectangular),
        "hann" => Ok(WindowKind::Hann),
        _ => Err(PyValueError::new_err(format!("unknown window {name:?}; use 'rect' or 'hann'"))),
    }
}

/// Converts any serializable value to plain Python objects through `json`.
fn to_python<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let json = PyModule::import(py, "json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

/// A uniformly sampled record.
#[pyclass(name = "Waveform", module = "vibcal", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWaveform {
    inner: core::Waveform,
}

#[pymethods]
impl PyWaveform {
    #[new]
    #[pyo3(signature = (samples, fs, t0 = 0.0, unit = String::new()))]
    fn new(samples: Vec<f64>, fs: f64, t0: f64, unit: String) -> PyResult<Self> {
        let inner = core::Waveform::with_unit(samples, fs, t0, unit).map_err(to_py_err)?;
        Ok(PyWaveform { inner })
    }

    /// Reads a waveform CSV; returns `(waveform, metadata)`.
    #[staticmethod]
    fn load(path: &str) -> PyResult<(PyWaveform, BTreeMap<String, String>)> {
        let file = core::io::load_waveform(path).map_err(to_py_err)?;
        Ok((PyWaveform { inner: file.waveform }, file.metadata))
    }

    #[pyo3(signature = (path, metadata = BTreeMap::new()))]
    fn save(&self, path: &str, metadata: BTreeMap<String, String>) -> PyResult<()> {
        core::io::save_waveform(path, &self.inner, &metadata).map_err(to_py_err)
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.sample_rate()
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.start_time()
    }

    #[getter]
    fn unit(&self) -> String {
        self.inner.unit().to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Waveform(n={}, fs={}, t0={}, unit={:?})",
            self.inner.len(),
            self.inner.sample_rate(),
            self.inner.start_time(),
            self.inner.unit()
        )
    }
}

/// A Butterworth bandpass centred on the vibration frequency.
#[pyclass(name = "FilterSpec", module = "vibcal", frozen, from_py_object)]
#[derive(Clone)]
struct PyFilterSpec {
    inner: core::FilterSpec,
}

#[pymethods]
impl PyFilterSpec {
    #[new]
    fn new(order: u32, q: f64, fv: f64, fs: f64) -> PyResult<Self> {
        let inner = core::design_bandpass(order, q, fv, fs).map_err(to_py_err)?;
        Ok(PyFilterSpec { inner })
    }

    #[getter]
    fn order(&self) -> u32 {
        self.inner.order()
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q_factor()
    }

    #[getter]
    fn fv(&self) -> f64 {
        self.inner.center()
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.sample_rate()
    }

    fn response(&self, f: f64) -> PyResult<Complex64> {
        core::filter_response(&self.inner, f).map_err(to_py_err)
    }

    fn gain(&self, f: f64) -> f64 {
        self.inner.gain(f)
    }

    fn apply(&self, w: &PyWaveform) -> PyResult<PyWaveform> {
        let inner = core::apply_filter(&w.inner, &self.inner).map_err(to_py_err)?;
        Ok(PyWaveform { inner })
    }

    #[pyo3(signature = (tolerance = 1e-3, max_cycles = 100_000))]
    fn settling_cycles(&self, tolerance: f64, max_cycles: usize) -> PyResult<f64> {
        core::settling_time_cycles(&self.inner, self.inner.center(), tolerance, max_cycles).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "FilterSpec(order={}, q={}, fv={}, fs={})",
            self.inner.order(),
            self.inner.q_factor(),
            self.inner.center(),
            self.inner.sample_rate()
        )
    }
}

/// Window, optional filter and reference differentiation.
#[pyclass(name = "ProcessingChain", module = "vibcal", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChain {
    inner: core::ProcessingChain,
}

#[pymethods]
impl PyChain {
    /// `discard_cycles=None` uses the filter's settling time at 0.1%.
    #[new]
    #[pyo3(signature = (window = "rect", filter = None, differentiate = false, discard_cycles = None))]
    fn new(
        window: &str,
        filter: Option<PyFilterSpec>,
        differentiate: bool,
        discard_cycles: Option<u32>,
    ) -> PyResult<Self> {
        let mut chain = core::ProcessingChain::conventional().with_window(window_kind(window)?);
        if let Some(f) = filter {
            let discard = match discard_cycles {
                Some(n) => n,
                None => core::filters::default_discard_cycles(&f.inner).map_err(to_py_err)?,
            };
            chain = chain.with_filter(f.inner, discard);
        } else if discard_cycles.is_some() {
            return Err(PyValueError::new_err("discard_cycles needs a filter"));
        }
        if differentiate {
            chain = chain.with_differentiation(2).map_err(to_py_err)?;
        }
        Ok(PyChain { inner: chain })
    }

    #[getter]
    fn window(&self) -> &'static str {
        match self.inner.window() {
            WindowKind::Rectangular => "rect",
            WindowKind::Hann => "hann",
        }
    }

    #[getter]
    fn discard_cycles(&self) -> u32 {
        self.inner.discard_cycles()
    }

    #[getter]
    fn differentiate(&self) -> bool {
        self.inner.differentiate_reference() > 0
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_python(py, &self.inner)
    }
}

/// Carrier, sensor and noise model of a synthetic calibration.
#[pyclass(name = "CalibrationScenario", module = "vibcal", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: core::CalibrationScenario,
}

#[pymethods]
impl PyScenario {
    /// A noise-free scenario; `fv` and `fs` are exact decimals (`"49.2"`).
    #[new]
    fn new(
        fv: &Bound<'_, PyAny>,
        fs: &Bound<'_, PyAny>,
        acceleration_amplitude: f64,
        sensitivity: f64,
        cycles: u64,
    ) -> PyResult<Self> {
        let inner = core::CalibrationScenario::new(exact(fv)?, exact(fs)?, acceleration_amplitude, sensitivity, cycles)
            .map_err(to_py_err)?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyScenario { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = core::io::load_json(path).map_err(to_py_err)?;
        Ok(PyScenario { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn fv(&self) -> f64 {
        self.inner.fv_hz()
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.fs_hz()
    }

    #[getter]
    fn record_length(&self) -> f64 {
        self.inner.record_length().to_f64()
    }

    #[getter]
    fn displacement_amplitude(&self) -> f64 {
        self.inner.displacement_amplitude()
    }

    fn with_cycles(&self, cycles: u64) -> PyResult<Self> {
        let inner = self.inner.clone().with_cycles(cycles).map_err(to_py_err)?;
        Ok(PyScenario { inner })
    }

    fn at_frequency(&self, fv: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = self.inner.at_frequency(exact(fv)?).map_err(to_py_err)?;
        Ok(PyScenario { inner })
    }
}

/// Rectangular-window fit at `fv`; `x0 sin(2 pi fv t)` maps to `1j * x0`.
#[pyfunction]
fn sam_fit(w: &PyWaveform, fv: f64) -> PyResult<Complex64> {
    Ok(core::sam_fit(&w.inner, fv).map_err(to_py_err)?.to_complex())
}

#[pyfunction]
#[pyo3(signature = (w, fv, window = "rect"))]
fn windowed_fit(w: &PyWaveform, fv: f64, window: &str) -> PyResult<Complex64> {
    Ok(core::windowed_fit(&w.inner, fv, window_kind(window)?)
        .map_err(to_py_err)?
        .to_complex())
}

/// Corrected complex amplitude of one channel run through a chain.
#[pyfunction]
#[pyo3(signature = (w, fv, chain, reference = false))]
fn process(w: &PyWaveform, fv: f64, chain: &PyChain, reference: bool) -> PyResult<Complex64> {
    let role = if reference {
        core::ChannelRole::Reference
    } else {
        core::ChannelRole::Sensor
    };
    Ok(core::process(&w.inner, fv, &chain.inner, role)
        .map_err(to_py_err)?
        .to_complex())
}

/// Returns `{"sensitivity", "phase_delay", "sensor_amplitude", "reference_amplitude"}`.
#[pyfunction]
#[pyo3(signature = (sensor, reference, fv, chain = None))]
fn calibrate(
    py: Python<'_>,
    sensor: &PyWaveform,
    reference: &PyWaveform,
    fv: f64,
    chain: Option<&PyChain>,
) -> PyResult<Py<PyAny>> {
    let chain = chain.map_or_else(core::ProcessingChain::conventional, |c| c.inner.clone());
    let result = core::calibrate(&sensor.inner, &reference.inner, fv, &chain).map_err(to_py_err)?;
    to_python(py, &result)
}

/// Predicted per-source uncertainty budget as a dict.
#[pyfunction]
#[pyo3(signature = (scenario, chain = None))]
fn budget(py: Python<'_>, scenario: &PyScenario, chain: Option<&PyChain>) -> PyResult<Py<PyAny>> {
    let chain = chain.map_or_else(core::ProcessingChain::conventional, |c| c.inner.clone());
    let b = core::budget(&scenario.inner, &chain).map_err(to_py_err)?;
    to_python(py, &b)
}

/// Monte Carlo statistics over `trials` synthesized pairs.
#[pyfunction]
#[pyo3(signature = (scenario, chain = None, trials = 100, seed = 0, stratified = false))]
fn run_trials(
    py: Python<'_>,
    scenario: &PyScenario,
    chain: Option<&PyChain>,
    trials: usize,
    seed: u64,
    stratified: bool,
) -> PyResult<Py<PyAny>> {
    let chain = chain.map_or_else(core::ProcessingChain::conventional, |c| c.inner.clone());
    let options = core::TrialOptions {
        stratified_phases: stratified,
        keep_records: false,
    };
    let sc = scenario.inner.clone();
    let stats = py
        .detach(|| core::run_trials(&sc, &chain, trials, seed, options))
        .map_err(to_py_err)?;
    to_python(py, &stats)
}

/// One synthesized `(sensor, reference)` pair.
#[pyfunction]
#[pyo3(signature = (scenario, seed = 0, trial = 0))]
fn synth_pair(scenario: &PyScenario, seed: u64, trial: u64) -> PyResult<(PyWaveform, PyWaveform)> {
    let pair = core::synth_pair(&scenario.inner, core::Seed::new(seed, trial)).map_err(to_py_err)?;
    Ok((PyWaveform { inner: pair.sensor }, PyWaveform { inner: pair.reference }))
}

/// Smallest record length nulling harmonics and the given lines.
#[pyfunction]
#[pyo3(signature = (fv, lines = Vec::new(), window = "rect", min_cycles = 1, max_t = None))]
fn plan_record_length(
    py: Python<'_>,
    fv: &Bound<'_, PyAny>,
    lines: Vec<Bound<'_, PyAny>>,
    window: &str,
    min_cycles: u64,
    max_t: Option<Bound<'_, PyAny>>,
) -> PyResult<Py<PyAny>> {
    let lines = lines.iter().map(exact).collect::<PyResult<Vec<_>>>()?;
    let max_t = match max_t {
        Some(t) => exact(&t)?,
        None => Exact::from_integer(1000),
    };
    let plan = core::plan_record_length(exact(fv)?, &lines, window_kind(window)?, min_cycles, max_t)
        .map_err(to_py_err)?;
    to_python(py, &plan)
}

/// `sinc^2(fv/fs)`, the second difference's gain at `fv`.
#[pyfunction]
fn diff_correction(fv: f64, fs: f64) -> PyResult<f64> {
    core::estimator::diff_correction(fv, fs).map_err(to_py_err)
}

#[pymodule]
fn vibcal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyWaveform>()?;
    m.add_class::<PyFilterSpec>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(sam_fit, m)?)?;
    m.add_function(wrap_pyfunction!(windowed_fit, m)?)?;
    m.add_function(wrap_pyfunction!(process, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(budget, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(synth_pair, m)?)?;
    m.add_function(wrap_pyfunction!(plan_record_length, m)?)?;
    m.add_function(wrap_pyfunction!(diff_correction, m)?)?;
    Ok(())
}
