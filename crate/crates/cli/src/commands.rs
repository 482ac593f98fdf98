//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use phaseforge::analysis::{
    backward_eliminate, extrapolate_coefficients, fit_exponential, fit_power_models, DataPoint, FitResult, ModelId,
    MIN_ALPHA_SQ,
};
use phaseforge::baselines::BaselineTable;
use phaseforge::io::{self, FormatError, SweepRow, TableKind};
use phaseforge::strategy::{run_ensemble, Ensemble, DEFAULT_BOOTSTRAP_RESAMPLES};
use phaseforge::{DesignPolicy, EnsembleOptions, EnsembleResult, Error, PhasePosterior, ProbeSpec};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Default `|α|²` grid for the baseline table.
pub const BASELINE_ALPHA_SQ: [f64; 14] = [
    0.1, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0,
];

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.to_path_buf(),
        source: e.into(),
    })?;
    let file = File::create(&path).map_err(|e| CliError::Output {
        path: path.clone(),
        source: e.into(),
    })?;
    Ok((path, BufWriter::new(file)))
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> Result<(), FormatError>,
) -> Result<PathBuf, CliError> {
    let (path, mut out) = create(dir, name)?;
    body(&mut out)
        .and_then(|()| out.flush().map_err(FormatError::from))
        .map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
    Ok(path)
}

/// Checks every setting a simulation needs before any work starts.
fn validate_simulation(config: &RunConfig) -> Result<(), CliError> {
    for &a2 in &config.alpha_sq {
        if !(a2.is_finite() && a2 > 0.0) {
            return Err(config.invalid("alpha-sq", format!("must be positive and finite, got {a2}")));
        }
    }
    if config.steps.contains(&0) {
        return Err(config.invalid("steps", "must be >= 1"));
    }
    if config.pnr.contains(&0) {
        return Err(config.invalid("pnr", "must be >= 1"));
    }
    for (key, empty) in [
        ("alpha-sq", config.alpha_sq.is_empty()),
        ("steps", config.steps.is_empty()),
        ("pnr", config.pnr.is_empty()),
    ] {
        if empty {
            return Err(config.invalid(key, "needs at least one value"));
        }
    }
    if config.trials == 0 {
        return Err(config.invalid("trials", "must be >= 1"));
    }
    PhasePosterior::uniform(config.grid).map_err(|e| config.invalid("grid", reason(e)))?;
    if let phaseforge::PhaseMode::Fixed(p) = config.phase_mode {
        if !p.is_finite() {
            return Err(config.invalid("phase-mode", "fixed phase must be finite"));
        }
    }
    Ok(())
}

fn reason(e: Error) -> String {
    match e {
        Error::InvalidParameter { reason, .. } => reason,
        other => other.to_string(),
    }
}

fn policy(config: &RunConfig) -> DesignPolicy {
    DesignPolicy::with_cost(config.cost)
}

fn options(config: &RunConfig) -> EnsembleOptions {
    EnsembleOptions {
        phase_mode: config.phase_mode,
        grid_size: config.grid,
        threads: config.threads,
        ..EnsembleOptions::new(config.trials, config.seed)
    }
}

fn ensemble(config: &RunConfig, alpha_sq: f64, steps: usize, pnr: usize) -> Result<Ensemble, CliError> {
    let spec = ProbeSpec::from_mean_photons(alpha_sq, steps, pnr)?;
    Ok(run_ensemble(&spec, &policy(config), &options(config))?)
}

#[derive(Serialize)]
struct Exclusion {
    trial: usize,
    error: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    policy: DesignPolicy,
    bootstrap_resamples: usize,
    result: &'a EnsembleResult,
    exclusions: Vec<Exclusion>,
}

/// Runs one ensemble and writes `trials.csv`, `curve.csv`, `summary.json`
/// and optionally `steps.csv`.
pub fn simulate(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    validate_simulation(config)?;
    for (key, n) in [
        ("alpha-sq", config.alpha_sq.len()),
        ("steps", config.steps.len()),
        ("pnr", config.pnr.len()),
    ] {
        if n != 1 {
            return Err(config.invalid(key, "simulate takes a single value; use sweep for lists"));
        }
    }
    let run = ensemble(config, config.alpha_sq[0], config.steps[0], config.pnr[0])?;
    let out = &config.out;
    let mut written = vec![
        write_file(out, "trials.csv", |w| io::write_trials(w, &run.records))?,
        write_file(out, "curve.csv", |w| io::write_curve(w, &run.result.per_step))?,
    ];
    if config.emit_steps {
        written.push(write_file(out, "steps.csv", |w| io::write_steps(w, &run.records))?);
    }
    let summary = Summary {
        config,
        policy: policy(config),
        bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
        result: &run.result,
        exclusions: run
            .exclusions
            .iter()
            .map(|(trial, e)| Exclusion {
                trial: *trial,
                error: e.to_string(),
            })
            .collect(),
    };
    written.push(write_file(out, "summary.json", |w| {
        io::write_json(w, "summary", &summary)
    })?);
    Ok(written)
}

/// Runs the cartesian product `α² × L × m` and writes `sweep.csv`.
pub fn sweep(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    validate_simulation(config)?;
    let mut rows = Vec::new();
    for &alpha_sq in &config.alpha_sq {
        for &steps in &config.steps {
            for &pnr in &config.pnr {
                let run = ensemble(config, alpha_sq, steps, pnr)?;
                eprintln!(
                    "alpha_sq={alpha_sq} steps={steps} pnr={pnr}: holevo variance {:.5} ± {:.5}",
                    run.result.holevo_variance, run.result.holevo_stderr
                );
                rows.push(SweepRow {
                    alpha_sq,
                    steps,
                    pnr,
                    trials: run.result.trials,
                    holevo_variance: run.result.holevo_variance,
                    holevo_stderr: run.result.holevo_stderr,
                });
            }
        }
    }
    Ok(vec![write_file(&config.out, "sweep.csv", |w| {
        io::write_sweep(w, &rows)
    })?])
}

/// Writes `baselines.csv` over the configured `|α|²` values.
pub fn baselines(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    for &a2 in &config.alpha_sq {
        if !(a2.is_finite() && a2 > 0.0) {
            return Err(config.invalid("alpha-sq", format!("must be positive and finite, got {a2}")));
        }
    }
    let table = BaselineTable::new(&config.alpha_sq)?;
    Ok(vec![write_file(&config.out, "baselines.csv", |w| {
        io::write_baselines(w, &table)
    })?])
}

#[derive(Debug, Serialize)]
pub struct ExponentialFit {
    pub source: String,
    pub alpha_sq: Option<f64>,
    pub pnr: Option<usize>,
    pub fit: FitResult,
}

#[derive(Debug, Serialize)]
pub struct PowerFits {
    pub source: String,
    pub steps: usize,
    pub pnr: usize,
    pub y1: FitResult,
    pub y2: FitResult,
    pub y3: FitResult,
    /// Model chosen by backward elimination, if it was conclusive.
    pub selected: Option<ModelId>,
    pub selection: Option<FitResult>,
    pub inconclusive: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Extrapolation {
    pub source: String,
    pub pnr: usize,
    /// `A1(L)` trend; `F` is the `L → ∞` value.
    pub a1: FitResult,
    pub a3: FitResult,
}

#[derive(Debug, Default, Serialize)]
pub struct Fits {
    pub exponential: Vec<ExponentialFit>,
    pub power: Vec<PowerFits>,
    pub extrapolation: Vec<Extrapolation>,
}

fn points(rows: impl IntoIterator<Item = (f64, f64, f64)>) -> Vec<DataPoint> {
    rows.into_iter()
        .filter(|&(_, _, s)| s > 0.0)
        .map(|(x, y, s)| DataPoint::new(x, y, s))
        .collect()
}

// f64 keys ordered by value; all keys here are positive
fn key(x: f64) -> u64 {
    x.to_bits()
}

/// Fits a sweep table: exponential in `L` per `(α², m)`, power models in
/// `α` per `(L, m)`, and the `L` trend of the `y3` coefficients per `m`.
pub fn fit_sweep(source: &str, rows: &[SweepRow]) -> Result<Fits, Error> {
    let mut fits = Fits::default();
    let mut by_alpha: BTreeMap<(u64, usize), Vec<&SweepRow>> = BTreeMap::new();
    let mut by_steps: BTreeMap<(usize, usize), Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        by_alpha.entry((key(row.alpha_sq), row.pnr)).or_default().push(row);
        by_steps.entry((row.steps, row.pnr)).or_default().push(row);
    }
    for ((alpha_bits, pnr), group) in &by_alpha {
        let pts = points(
            group
                .iter()
                .map(|r| (r.steps as f64, r.holevo_variance, r.holevo_stderr)),
        );
        if pts.len() < 4 {
            continue;
        }
        fits.exponential.push(ExponentialFit {
            source: source.to_string(),
            alpha_sq: Some(f64::from_bits(*alpha_bits)),
            pnr: Some(*pnr),
            fit: fit_exponential(&pts)?,
        });
    }
    let mut trends: BTreeMap<usize, Vec<(f64, f64, f64, f64, f64)>> = BTreeMap::new();
    for (&(steps, pnr), group) in &by_steps {
        let pts = points(group.iter().map(|r| (r.alpha_sq, r.holevo_variance, r.holevo_stderr)));
        if pts.iter().filter(|p| p.x > MIN_ALPHA_SQ).count() < 5 {
            continue;
        }
        let y3 = fit_power_models(&pts, ModelId::Y3)?;
        let (selected, selection, inconclusive) = match backward_eliminate(&pts) {
            Ok(s) => (Some(s.model_id), Some(s.fit), None),
            Err(Error::Inconclusive(why)) => (None, None, Some(why)),
            Err(e) => return Err(e),
        };
        let term = |name| {
            (
                y3.coefficient(name).unwrap_or(f64::NAN),
                y3.standard_error(name).unwrap_or(0.0),
            )
        };
        let ((a1, a1_se), (a3, a3_se)) = (term("A1"), term("A3"));
        trends
            .entry(pnr)
            .or_default()
            .push((steps as f64, a1, a1_se, a3, a3_se));
        fits.power.push(PowerFits {
            source: source.to_string(),
            steps,
            pnr,
            y1: fit_power_models(&pts, ModelId::Y1)?,
            y2: fit_power_models(&pts, ModelId::Y2)?,
            y3,
            selected,
            selection,
            inconclusive,
        });
    }
    for (pnr, trend) in trends {
        let a1 = points(trend.iter().map(|t| (t.0, t.1, t.2)));
        let a3 = points(trend.iter().map(|t| (t.0, t.3, t.4)));
        if a1.len() < 4 || a3.len() < 4 {
            continue;
        }
        fits.extrapolation.push(Extrapolation {
            source: source.to_string(),
            pnr,
            a1: extrapolate_coefficients(&a1)?,
            a3: extrapolate_coefficients(&a3)?,
        });
    }
    Ok(fits)
}

/// Reads curve and sweep tables and writes `fits.json`.
pub fn fit(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    if config.input.is_empty() {
        return Err(CliError::Usage("fit needs at least one --input table".into()));
    }
    let mut fits = Fits::default();
    for path in &config.input {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
            path: path.clone(),
            source,
        })?;
        let schema_error = |source| CliError::Schema {
            path: path.clone(),
            source,
        };
        let source = path.display().to_string();
        match io::peek_kind(&text).map_err(schema_error)? {
            TableKind::Curve => {
                let curve = io::read_curve(BufReader::new(text.as_bytes())).map_err(schema_error)?;
                let pts = points(
                    curve
                        .iter()
                        .map(|s| (s.step as f64, s.holevo_variance, s.holevo_stderr)),
                );
                fits.exponential.push(ExponentialFit {
                    source,
                    alpha_sq: None,
                    pnr: None,
                    fit: fit_exponential(&pts)?,
                });
            }
            TableKind::Sweep => {
                let rows = io::read_sweep(text.as_bytes()).map_err(schema_error)?;
                if rows.is_empty() {
                    return Err(schema_error(FormatError::Schema {
                        line: 3,
                        message: "no data rows".into(),
                    }));
                }
                let more = fit_sweep(&source, &rows)?;
                fits.exponential.extend(more.exponential);
                fits.power.extend(more.power);
                fits.extrapolation.extend(more.extrapolation);
            }
            other => {
                return Err(schema_error(FormatError::Schema {
                    line: 1,
                    message: format!("fit reads curve or sweep tables, not {}", other.name()),
                }))
            }
        }
    }
    Ok(vec![write_file(&config.out, "fits.json", |w| {
        io::write_json(w, "fits", &fits)
    })?])
}
