//! Python module `phaseforge`.
//!
//! Thin wrappers over the core crate. Long computations release the GIL.

use phaseforge::analysis::{self, DataPoint, FitResult, ModelId};
use phaseforge::strategy::{self, TrialRecord};
use phaseforge::{baselines, design, model, CostFunction, PhaseMode};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: phaseforge::Error) -> PyErr {
    match e {
        phaseforge::Error::InvalidParameter { .. } | phaseforge::Error::NonPositiveAlpha(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = phaseforge::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Probe configuration: mean photon number, adaptive steps and PNR resolution.
#[pyclass(name = "ProbeSpec", frozen, from_py_object)]
#[derive(Clone)]
struct PyProbeSpec(model::ProbeSpec);

#[pymethods]
impl PyProbeSpec {
    #[new]
    #[pyo3(signature = (alpha_sq, steps, pnr))]
    fn new(alpha_sq: f64, steps: usize, pnr: usize) -> PyResult<Self> {
        model::ProbeSpec::from_mean_photons(alpha_sq, steps, pnr)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn mean_photons(&self) -> f64 {
        self.0.mean_photons()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps()
    }

    #[getter]
    fn pnr(&self) -> usize {
        self.0.pnr()
    }

    /// Probability of each outcome `0..=pnr` (the last is the overflow).
    fn outcome_pmf(&self, theta: f64, beta: f64, phi: f64) -> PyResult<Vec<f64>> {
        let design = model::DisplacementDesign::new(theta, beta).map_err(to_py)?;
        Ok(model::outcome_pmf(&self.0, &design, phi))
    }

    fn __repr__(&self) -> String {
        format!(
            "ProbeSpec(alpha_sq={}, steps={}, pnr={})",
            self.0.mean_photons(),
            self.0.steps(),
            self.0.pnr()
        )
    }
}

/// Grid posterior over the phase.
#[pyclass(name = "PhasePosterior", frozen, from_py_object)]
#[derive(Clone)]
struct PyPhasePosterior(phaseforge::PhasePosterior);

#[pymethods]
impl PyPhasePosterior {
    #[staticmethod]
    #[pyo3(signature = (grid_size = 1024))]
    fn uniform(grid_size: usize) -> PyResult<Self> {
        phaseforge::PhasePosterior::uniform(grid_size).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_weights(weights: Vec<f64>) -> PyResult<Self> {
        phaseforge::PhasePosterior::from_weights(weights)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn map_estimate(&self) -> f64 {
        self.0.map_estimate()
    }

    /// `(sharpness, mean direction)` of the posterior.
    fn circular_moment(&self) -> (f64, f64) {
        let m = self.0.circular_moment();
        (m.magnitude, m.angle)
    }

    fn entropy(&self) -> f64 {
        self.0.entropy()
    }

    fn bayes_update(&self, spec: &PyProbeSpec, theta: f64, beta: f64, outcome: usize) -> PyResult<Self> {
        let design = model::DisplacementDesign::new(theta, beta).map_err(to_py)?;
        let outcome = model::Outcome::new(outcome, spec.0.pnr()).map_err(to_py)?;
        self.0.bayes_update(&spec.0, &design, outcome).map(Self).map_err(to_py)
    }

    #[pyo3(signature = (spec, theta, beta, cost = "sharpness"))]
    fn expected_cost(&self, spec: &PyProbeSpec, theta: f64, beta: f64, cost: &str) -> PyResult<f64> {
        let design = model::DisplacementDesign::new(theta, beta).map_err(to_py)?;
        match parse::<CostFunction>(cost)? {
            CostFunction::ExpectedSharpness => design::expected_sharpness(&self.0, &spec.0, &design),
            CostFunction::MutualInformation => design::mutual_information(&self.0, &spec.0, &design),
        }
        .map_err(to_py)
    }

    /// Next design `(theta, |beta|)` given the current estimate.
    #[pyo3(signature = (spec, phi_hat, cost = "sharpness"))]
    fn choose_design(&self, spec: &PyProbeSpec, phi_hat: f64, cost: &str) -> PyResult<(f64, f64)> {
        let policy = design::DesignPolicy::with_cost(parse(cost)?);
        // a known estimate makes the choice deterministic; the RNG is unused
        let mut rng = phaseforge::rng::stream(0, 0);
        let d = design::choose_design(&self.0, &spec.0, Some(phi_hat), &policy, &mut rng).map_err(to_py)?;
        Ok((d.theta(), d.magnitude()))
    }
}

fn trial_dict<'py>(py: Python<'py>, record: &TrialRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("seed", record.seed)?;
    d.set_item("true_phase", record.true_phase)?;
    d.set_item("final_estimate", record.final_estimate)?;
    d.set_item("error", record.error())?;
    d.set_item("theta", record.steps.iter().map(|s| s.theta).collect::<Vec<_>>())?;
    d.set_item(
        "beta_magnitude",
        record.steps.iter().map(|s| s.beta_magnitude).collect::<Vec<_>>(),
    )?;
    d.set_item("outcome", record.steps.iter().map(|s| s.outcome).collect::<Vec<_>>())?;
    d.set_item(
        "map_estimate",
        record.steps.iter().map(|s| s.map_estimate).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "delta_design",
        record.steps.iter().map(|s| s.delta_design).collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// One adaptive single-shot estimation; returns its per-step trajectory.
#[pyfunction]
#[pyo3(signature = (spec, true_phase, seed, grid_size = 1024, cost = "sharpness"))]
fn run_single_shot<'py>(
    py: Python<'py>,
    spec: &PyProbeSpec,
    true_phase: f64,
    seed: u64,
    grid_size: usize,
    cost: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = design::DesignPolicy::with_cost(parse(cost)?);
    let spec = spec.0;
    let record = py
        .detach(|| strategy::run_single_shot(&spec, &policy, grid_size, true_phase, seed))
        .map_err(to_py)?;
    trial_dict(py, &record)
}

/// Monte Carlo ensemble; returns the Holevo variance, its bootstrap error,
/// the per-step curve and the final estimation errors.
#[pyfunction]
#[pyo3(signature = (spec, trials, seed, grid_size = 1024, cost = "sharpness", phase_mode = "random", threads = None))]
#[allow(clippy::too_many_arguments)]
fn run_ensemble<'py>(
    py: Python<'py>,
    spec: &PyProbeSpec,
    trials: usize,
    seed: u64,
    grid_size: usize,
    cost: &str,
    phase_mode: &str,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = design::DesignPolicy::with_cost(parse(cost)?);
    let options = phaseforge::EnsembleOptions {
        grid_size,
        phase_mode: parse::<PhaseMode>(phase_mode)?,
        threads,
        ..phaseforge::EnsembleOptions::new(trials, seed)
    };
    let spec = spec.0;
    let run = py
        .detach(|| strategy::run_ensemble(&spec, &policy, &options))
        .map_err(to_py)?;
    let r = &run.result;
    let d = PyDict::new(py);
    d.set_item("trials", r.trials)?;
    d.set_item("excluded", r.excluded)?;
    d.set_item("holevo_variance", r.holevo_variance)?;
    d.set_item("holevo_stderr", r.holevo_stderr)?;
    d.set_item("mean_delta_design_final", r.mean_delta_design_final)?;
    d.set_item(
        "curve_variance",
        r.per_step.iter().map(|s| s.holevo_variance).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "curve_stderr",
        r.per_step.iter().map(|s| s.holevo_stderr).collect::<Vec<_>>(),
    )?;
    d.set_item("errors", run.records.iter().map(TrialRecord::error).collect::<Vec<_>>())?;
    Ok(d)
}

/// Reference variances at mean photon number `alpha_sq`.
#[pyfunction]
fn baseline_row<'py>(py: Python<'py>, alpha_sq: f64) -> PyResult<Bound<'py, PyDict>> {
    let row = baselines::BaselineRow::new(alpha_sq).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("alpha_sq", row.alpha_sq)?;
    d.set_item("qcrb", row.qcrb)?;
    d.set_item("heterodyne", row.heterodyne)?;
    d.set_item("mkii_asymptotic", row.mkii_asymptotic)?;
    d.set_item("cpm_exact", row.cpm_exact)?;
    d.set_item("cpm_asymptotic", row.cpm_asymptotic)?;
    d.set_item("nongaussian_asymptotic", row.nongaussian_asymptotic)?;
    Ok(d)
}

/// Holevo variance of a sample of angular errors.
#[pyfunction]
fn holevo_variance(errors: Vec<f64>) -> PyResult<f64> {
    phaseforge::posterior::holevo_variance(&errors).map_err(to_py)
}

fn data(x: &[f64], y: &[f64], sigma: &[f64]) -> PyResult<Vec<DataPoint>> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(PyValueError::new_err("x, y and sigma must have equal lengths"));
    }
    Ok((0..x.len()).map(|i| DataPoint::new(x[i], y[i], sigma[i])).collect())
}

fn fit_dict<'py>(py: Python<'py>, fit: &FitResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("model", fit.model_id.to_string())?;
    d.set_item("names", fit.names.clone())?;
    d.set_item("coefficients", fit.coefficients.clone())?;
    d.set_item("standard_errors", fit.standard_errors.clone())?;
    d.set_item("p_values", fit.p_values.clone())?;
    d.set_item("residual_standard_error", fit.residual_standard_error)?;
    d.set_item("covariance", fit.covariance.clone())?;
    Ok(d)
}

/// Weighted fit of `y = A exp(-B x) + C`.
#[pyfunction]
fn fit_exponential<'py>(py: Python<'py>, x: Vec<f64>, y: Vec<f64>, sigma: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let fit = analysis::fit_exponential(&data(&x, &y, &sigma)?).map_err(to_py)?;
    fit_dict(py, &fit)
}

/// Weighted inverse-power fit in `alpha`; `model` is `y1`, `y2` or `y3`.
#[pyfunction]
fn fit_power_models<'py>(
    py: Python<'py>,
    alpha_sq: Vec<f64>,
    y: Vec<f64>,
    sigma: Vec<f64>,
    model: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let model_id = match model {
        "y1" => ModelId::Y1,
        "y2" => ModelId::Y2,
        "y3" => ModelId::Y3,
        other => return Err(PyValueError::new_err(format!("unknown power model `{other}`"))),
    };
    let fit = analysis::fit_power_models(&data(&alpha_sq, &y, &sigma)?, model_id).map_err(to_py)?;
    fit_dict(py, &fit)
}

/// Backward elimination; returns the selected fit or raises on an
/// inconclusive outcome.
#[pyfunction]
fn backward_eliminate<'py>(
    py: Python<'py>,
    alpha_sq: Vec<f64>,
    y: Vec<f64>,
    sigma: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let selection = analysis::backward_eliminate(&data(&alpha_sq, &y, &sigma)?).map_err(to_py)?;
    fit_dict(py, &selection.fit)
}

#[pymodule]
#[pyo3(name = "phaseforge")]
fn phaseforge_python(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProbeSpec>()?;
    m.add_class::<PyPhasePosterior>()?;
    m.add_function(wrap_pyfunction!(run_single_shot, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_row, m)?)?;
    m.add_function(wrap_pyfunction!(holevo_variance, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_models, m)?)?;
    m.add_function(wrap_pyfunction!(backward_eliminate, m)?)?;
    Ok(())
}
