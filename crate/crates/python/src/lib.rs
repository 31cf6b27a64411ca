//! Python bindings: states, gates, detectors, the cubic phase gate and the
//! seeded experiments (whose reports are returned as JSON text).

use cvsim::clifford;
use cvsim::cubic::{self, CubicAncilla, CubicPhaseGate, Provenance};
use cvsim::detectors::{self, MeasurementRecord, Outcome, ThresholdOutcome, DEFAULT_HOMODYNE_RESOLUTION};
use cvsim::experiments::{Experiment, ExperimentConfig};
use cvsim::fock::{self, ModeOperator, MultiModeState};
use cvsim::C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: cvsim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pure state of one or more truncated modes.
#[pyclass(name = "State", module = "pycvsim", from_py_object)]
#[derive(Clone)]
struct PyState(MultiModeState);

#[pymethods]
impl PyState {
    /// Normalized state from row-major amplitudes (last mode fastest).
    #[new]
    fn new(cutoffs: Vec<usize>, amplitudes: Vec<C64>) -> PyResult<Self> {
        MultiModeState::new(cutoffs, amplitudes).map(Self).map_err(err)
    }

    #[staticmethod]
    fn vacuum(cutoffs: Vec<usize>) -> PyResult<Self> {
        MultiModeState::vacuum(&cutoffs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn fock(occupations: Vec<usize>, cutoffs: Vec<usize>) -> PyResult<Self> {
        MultiModeState::fock(&occupations, &cutoffs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn coherent(alpha: C64, cutoff: usize) -> PyResult<Self> {
        clifford::coherent_state(alpha, cutoff).map(Self).map_err(err)
    }

    #[staticmethod]
    fn squeezed(eta: C64, cutoff: usize) -> PyResult<Self> {
        clifford::squeezed_vacuum(eta, cutoff).map(Self).map_err(err)
    }

    #[staticmethod]
    fn epr(eta: f64, cutoffs: (usize, usize)) -> PyResult<Self> {
        clifford::epr_pair(eta, cutoffs).map(Self).map_err(err)
    }

    #[getter]
    fn cutoffs(&self) -> Vec<usize> {
        self.0.cutoffs().to_vec()
    }

    fn amplitudes(&self) -> Vec<C64> {
        self.0.amplitudes().to_vec()
    }

    fn amplitude(&self, occupations: Vec<usize>) -> PyResult<C64> {
        if occupations.len() != self.0.num_modes() || occupations.iter().zip(self.0.cutoffs()).any(|(n, d)| n >= d) {
            return Err(PyValueError::new_err("occupations outside the truncated space"));
        }
        Ok(self.0.amplitude(&occupations))
    }

    fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    fn photon_distribution(&self, mode: usize) -> PyResult<Vec<f64>> {
        self.0.photon_distribution(mode).map_err(err)
    }

    /// Largest weight in the top tenth of any mode's levels.
    fn leakage(&self) -> f64 {
        self.0.leakage()
    }

    fn tensor(&self, other: &PyState) -> Self {
        Self(self.0.tensor(&other.0))
    }

    fn fidelity(&self, other: &PyState) -> PyResult<f64> {
        fock::fidelity(&self.0, &other.0).map_err(err)
    }

    fn apply(&self, gate: &PyGate, modes: Vec<usize>) -> PyResult<Self> {
        fock::apply(&self.0, &gate.0, &modes).map(Self).map_err(err)
    }

    /// `<q>` and `<p>` of one mode.
    fn quadrature_means(&self, mode: usize) -> PyResult<(f64, f64)> {
        let (q, p) = fock::quadrature_operators(self.0.cutoffs()[mode]).map_err(err)?;
        let mq = fock::expectation(&self.0, &q, &[mode]).map_err(err)?.re;
        let mp = fock::expectation(&self.0, &p, &[mode]).map_err(err)?.re;
        Ok((mq, mp))
    }

    fn __repr__(&self) -> String {
        format!("State(cutoffs={:?})", self.0.cutoffs())
    }
}

/// Unitary (or general) operator on one or two modes.
#[pyclass(name = "Gate", module = "pycvsim", from_py_object)]
#[derive(Clone)]
struct PyGate(ModeOperator);

#[pymethods]
impl PyGate {
    #[staticmethod]
    fn displacement(alpha: C64, cutoff: usize) -> PyResult<Self> {
        clifford::displacement(alpha, cutoff).map(Self).map_err(err)
    }

    #[staticmethod]
    fn squeeze(eta: C64, cutoff: usize) -> PyResult<Self> {
        clifford::squeeze_one(eta, cutoff).map(Self).map_err(err)
    }

    #[staticmethod]
    fn two_mode_squeeze(eta: C64, cutoffs: (usize, usize)) -> PyResult<Self> {
        clifford::squeeze_two(eta, cutoffs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn sum(cutoffs: (usize, usize)) -> PyResult<Self> {
        clifford::sum_gate(cutoffs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn sum_inverse(cutoffs: (usize, usize)) -> PyResult<Self> {
        clifford::sum_inverse(cutoffs).map(Self).map_err(err)
    }

    #[staticmethod]
    fn beamsplitter(theta: f64, cutoffs: (usize, usize)) -> PyResult<Self> {
        clifford::beamsplitter(theta, cutoffs).map(Self).map_err(err)
    }

    /// `exp(i (c2 q^2 + c1 q + c0))`
    #[staticmethod]
    fn quadratic_phase(c2: f64, c1: f64, c0: f64, cutoff: usize) -> PyResult<Self> {
        clifford::quadratic_phase(c2, c1, c0, cutoff).map(Self).map_err(err)
    }

    /// `exp(i gamma q^3)`
    #[staticmethod]
    fn cubic(gamma: f64, cutoff: usize) -> PyResult<Self> {
        cubic::direct_cubic(gamma, cutoff).map(Self).map_err(err)
    }

    /// Feed-forward correction for homodyne outcome `a`.
    #[staticmethod]
    fn correction(a: f64, gamma: f64, cutoff: usize) -> PyResult<Self> {
        cubic::correction_u(a, gamma, cutoff).map(Self).map_err(err)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims().to_vec()
    }

    fn unitarity_error(&self) -> f64 {
        self.0.unitarity_error()
    }

    fn matrix(&self) -> Vec<Vec<C64>> {
        let m = self.0.matrix();
        (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
    }

    fn inverse(&self) -> Self {
        Self(self.0.adjoint())
    }

    fn __matmul__(&self, rhs: &PyGate) -> PyResult<Self> {
        self.0.compose(&rhs.0).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Gate(dims={:?})", self.0.dims())
    }
}

/// Result of one measurement. `kind` names the outcome type; `count` and
/// `value` carry its integer and real parts where they exist.
#[pyclass(name = "Measurement", module = "pycvsim", get_all)]
struct PyMeasurement {
    kind: String,
    count: Option<i64>,
    value: Option<f64>,
    probability: f64,
    post_state: PyState,
    remainder: Option<PyState>,
}

impl From<MeasurementRecord> for PyMeasurement {
    fn from(r: MeasurementRecord) -> Self {
        let (kind, value) = match r.outcome {
            Outcome::Count(_) => ("count", None),
            Outcome::Threshold(ThresholdOutcome::Vacuum) => ("vacuum", None),
            Outcome::Threshold(ThresholdOutcome::Click) => ("click", None),
            Outcome::Clicks(_) => ("clicks", None),
            Outcome::Phase { phi, .. } => ("phase", Some(phi)),
            Outcome::Pointer { p, .. } => ("pointer", Some(p)),
            Outcome::Quadrature(q) => ("quadrature", Some(q)),
        };
        Self {
            kind: kind.into(),
            count: r.outcome.count(),
            value,
            probability: r.probability,
            post_state: PyState(r.post_state),
            remainder: r.remainder.map(PyState),
        }
    }
}

#[pyfunction]
fn photon_count(state: &PyState, mode: usize, seed: u64) -> PyResult<PyMeasurement> {
    detectors::photon_count_pvm(&state.0, mode, &mut rng(seed)).map(Into::into).map_err(err)
}

#[pyfunction]
fn threshold(state: &PyState, mode: usize, seed: u64) -> PyResult<PyMeasurement> {
    detectors::itd_pvm(&state.0, mode, &mut rng(seed)).map(Into::into).map_err(err)
}

#[pyfunction]
fn multiplexed(state: &PyState, mode: usize, n_modes: usize, seed: u64) -> PyResult<PyMeasurement> {
    detectors::multiplexed_count(&state.0, mode, n_modes, &mut rng(seed)).map(Into::into).map_err(err)
}

#[pyfunction]
fn kerr(state: &PyState, mode: usize, chi_t: f64, delta_phi: f64, seed: u64) -> PyResult<PyMeasurement> {
    detectors::kerr_qnd_measure(&state.0, mode, chi_t, delta_phi, &mut rng(seed)).map(Into::into).map_err(err)
}

#[pyfunction]
fn pointer(state: &PyState, mode: usize, lambda_t: f64, delta_p: f64, seed: u64) -> PyResult<PyMeasurement> {
    detectors::pointer_measure(&state.0, mode, lambda_t, delta_p, &mut rng(seed)).map(Into::into).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (state, mode, seed, resolution = DEFAULT_HOMODYNE_RESOLUTION))]
fn homodyne(state: &PyState, mode: usize, seed: u64, resolution: f64) -> PyResult<PyMeasurement> {
    detectors::homodyne_measure(&state.0, mode, &mut rng(seed), resolution).map(Into::into).map_err(err)
}

/// `(exact, bound)` probability that `k` photons on `n_modes` detectors
/// give fewer than `k` clicks.
#[pyfunction]
fn undercount_probability(k: usize, n_modes: usize) -> PyResult<(f64, f64)> {
    let u = detectors::undercount_probability(k, n_modes).map_err(err)?;
    Ok((u.exact, u.bound))
}

/// Cubic phase resource state for the gate.
#[pyclass(name = "CubicAncilla", module = "pycvsim", from_py_object)]
#[derive(Clone)]
struct PyCubicAncilla(CubicAncilla);

#[pymethods]
impl PyCubicAncilla {
    #[getter]
    fn state(&self) -> PyState {
        PyState(self.0.state.clone())
    }

    #[getter]
    fn gamma_effective(&self) -> f64 {
        self.0.gamma_effective
    }

    #[getter]
    fn captured_fraction(&self) -> Option<f64> {
        self.0.captured_fraction
    }

    /// Heralding photon count, for heralded states.
    #[getter]
    fn heralded_photons(&self) -> Option<usize> {
        match self.0.provenance {
            Provenance::Conditional { n, .. } => Some(n),
            Provenance::Regularized { .. } => None,
        }
    }

    /// Quadratic-over-cubic residual ratio of the phase fit.
    #[getter]
    fn fit_improvement(&self) -> Option<f64> {
        self.0.phase_fit.as_ref().map(|f| f.improvement())
    }
}

#[pyfunction]
fn regularized_cubic_state(gamma: f64, sigma: f64, cutoff: usize) -> PyResult<PyCubicAncilla> {
    cubic::regularized_cubic_state(gamma, sigma, cutoff).map(PyCubicAncilla).map_err(err)
}

/// Heralds on `D_1(i w) S_12(eta)|00>`, retrying zero-photon outcomes up to
/// `max_attempts` times.
#[pyfunction]
#[pyo3(signature = (w, eta, cutoffs, seed, max_attempts = 1000))]
fn heralded_cubic_state(
    w: f64,
    eta: f64,
    cutoffs: (usize, usize),
    seed: u64,
    max_attempts: u32,
) -> PyResult<PyCubicAncilla> {
    let weta = cubic::prepare_weta(w, eta, cutoffs).map_err(err)?;
    let mut r = rng(seed);
    for _ in 0..max_attempts {
        match cubic::conditional_cubic_state(&weta, &mut r) {
            Ok(a) => return Ok(PyCubicAncilla(a)),
            Err(cvsim::Error::ZeroPhotonOutcome) => continue,
            Err(e) => return Err(err(e)),
        }
    }
    Err(PyValueError::new_err(format!("no heralding event in {max_attempts} attempts")))
}

/// One run of the measurement-based cubic phase gate: returns
/// `(output, measured_a, oracle_fidelity, leakage)`.
#[pyfunction]
#[pyo3(signature = (input, ancilla, seed, gamma = None, resolution = DEFAULT_HOMODYNE_RESOLUTION))]
fn cubic_phase_gate(
    input: &PyState,
    ancilla: &PyCubicAncilla,
    seed: u64,
    gamma: Option<f64>,
    resolution: f64,
) -> PyResult<(PyState, f64, f64, f64)> {
    let gate = CubicPhaseGate::new(gamma.unwrap_or(ancilla.0.gamma_effective), ancilla.0.cutoff(), resolution)
        .map_err(err)?;
    let t = gate.run(&input.0, &ancilla.0, &mut rng(seed)).map_err(err)?;
    Ok((PyState(t.output), t.measured_a, t.oracle_fidelity, t.leakage))
}

/// Built-in experiment configuration as JSON.
#[pyfunction]
fn default_config() -> String {
    serde_json::to_string_pretty(&ExperimentConfig::default()).expect("config serializes")
}

/// Runs one experiment (`undercount`, `scaling`, `cubic_gate`, `kerr`,
/// `pointer`) and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (name, config = None, seed = None, trials = None))]
fn run_experiment(
    py: Python<'_>,
    name: &str,
    config: Option<&str>,
    seed: Option<u64>,
    trials: Option<u32>,
) -> PyResult<String> {
    let experiment = Experiment::ALL
        .into_iter()
        .find(|e| e.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown experiment {name:?}")))?;
    let mut c = match config {
        Some(text) => ExperimentConfig::from_json(text).map_err(err)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(t) = trials {
        c.set_trials(t);
    }
    c.validate().map_err(err)?;
    let report = py.detach(|| experiment.run(&c)).map_err(err)?;
    Ok(report.to_json())
}

#[pymodule]
fn pycvsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_class::<PyGate>()?;
    m.add_class::<PyMeasurement>()?;
    m.add_class::<PyCubicAncilla>()?;
    m.add_function(wrap_pyfunction!(photon_count, m)?)?;
    m.add_function(wrap_pyfunction!(threshold, m)?)?;
    m.add_function(wrap_pyfunction!(multiplexed, m)?)?;
    m.add_function(wrap_pyfunction!(kerr, m)?)?;
    m.add_function(wrap_pyfunction!(pointer, m)?)?;
    m.add_function(wrap_pyfunction!(homodyne, m)?)?;
    m.add_function(wrap_pyfunction!(undercount_probability, m)?)?;
    m.add_function(wrap_pyfunction!(regularized_cubic_state, m)?)?;
    m.add_function(wrap_pyfunction!(heralded_cubic_state, m)?)?;
    m.add_function(wrap_pyfunction!(cubic_phase_gate, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("SCHEMA_VERSION", cvsim::experiments::SCHEMA_VERSION)?;
    Ok(())
}
