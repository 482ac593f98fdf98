//! The L-step adaptive protocol and its Monte Carlo ensemble.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::angle::{circular_mean, wrap_positive, wrap_signed};
use crate::design::{choose_design, DesignPolicy};
use crate::error::{invalid, Error, Result};
use crate::model::{sample_outcome, ProbeSpec};
use crate::posterior::{holevo_variance, PhasePosterior};
use crate::rng::{split_seed, stream, PHASE_STREAM, PROTOCOL_STREAM};

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 500;

/// Excluded trials tolerated before an ensemble is declared failed.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub theta: f64,
    pub beta_magnitude: f64,
    pub outcome: usize,
    pub map_estimate: f64,
    /// `map_estimate − theta`, wrapped to `(−π, π]`.
    pub delta_design: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub true_phase: f64,
    pub steps: Vec<StepRecord>,
    pub final_estimate: f64,
}

impl TrialRecord {
    /// Estimation error `φ̂ − φ`, wrapped to `(−π, π]`.
    pub fn error(&self) -> f64 {
        wrap_signed(self.final_estimate - self.true_phase)
    }

    pub fn last_step(&self) -> &StepRecord {
        self.steps.last().expect("records hold at least one step")
    }
}

/// Runs one single-shot estimation from a flat prior.
pub fn run_single_shot(
    spec: &ProbeSpec,
    policy: &DesignPolicy,
    grid_size: usize,
    true_phase: f64,
    seed: u64,
) -> Result<TrialRecord> {
    policy.validate()?;
    let true_phase = wrap_positive(true_phase);
    let mut rng = stream(seed, PROTOCOL_STREAM);
    let mut posterior = PhasePosterior::uniform(grid_size)?;
    let mut estimate = None;
    let mut steps = Vec::with_capacity(spec.steps());
    for step in 1..=spec.steps() {
        let degenerate = |e: Error| match e {
            Error::DegenerateLikelihood => Error::DegenerateStep { step },
            other => other,
        };
        let design = choose_design(&posterior, spec, estimate, policy, &mut rng).map_err(degenerate)?;
        let outcome = sample_outcome(spec, &design, true_phase, &mut rng);
        posterior = posterior.bayes_update(spec, &design, outcome).map_err(degenerate)?;
        let map = posterior.map_estimate();
        estimate = Some(map);
        steps.push(StepRecord {
            theta: design.theta(),
            beta_magnitude: design.magnitude(),
            outcome: outcome.count(),
            map_estimate: map,
            delta_design: wrap_signed(map - design.theta()),
        });
    }
    Ok(TrialRecord {
        seed,
        true_phase,
        final_estimate: steps.last().map_or(0.0, |s| s.map_estimate),
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "phase", rename_all = "snake_case")]
pub enum PhaseMode {
    RandomUniform,
    Fixed(f64),
}

impl std::str::FromStr for PhaseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "random" {
            return Ok(Self::RandomUniform);
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            let phase: f64 = rest
                .parse()
                .map_err(|_| invalid("phase_mode", format!("bad fixed phase `{rest}`")))?;
            if phase.is_finite() {
                return Ok(Self::Fixed(phase));
            }
        }
        Err(invalid(
            "phase_mode",
            format!("expected `random` or `fixed:<rad>`, got `{s}`"),
        ))
    }
}

impl std::fmt::Display for PhaseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::RandomUniform => f.write_str("random"),
            Self::Fixed(p) => write!(f, "fixed:{p}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub trials: usize,
    pub master_seed: u64,
    pub phase_mode: PhaseMode,
    pub grid_size: usize,
    pub bootstrap_resamples: usize,
    /// Worker threads; `None` uses the global rayon pool. Results do not
    /// depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl EnsembleOptions {
    pub fn new(trials: usize, master_seed: u64) -> Self {
        Self {
            trials,
            master_seed,
            phase_mode: PhaseMode::RandomUniform,
            grid_size: crate::posterior::DEFAULT_GRID_SIZE,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStatistic {
    pub step: usize,
    pub holevo_variance: f64,
    pub holevo_stderr: f64,
}

/// Aggregate statistics of an ensemble of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub trials: usize,
    pub excluded: usize,
    pub holevo_variance: f64,
    pub holevo_stderr: f64,
    /// Circular mean of the final-step `φ̂ − θ` (NaN if it has no direction).
    pub mean_delta_design_final: f64,
    pub per_step: Vec<StepStatistic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub result: EnsembleResult,
    pub records: Vec<TrialRecord>,
    /// Trial indices that failed, with the failure.
    pub exclusions: Vec<(usize, Error)>,
}

fn trial_phase(mode: PhaseMode, seed: u64) -> f64 {
    match mode {
        PhaseMode::RandomUniform => stream(seed, PHASE_STREAM).random::<f64>() * TAU,
        PhaseMode::Fixed(p) => wrap_positive(p),
    }
}

/// Runs `options.trials` independent single shots and aggregates them.
pub fn run_ensemble(spec: &ProbeSpec, policy: &DesignPolicy, options: &EnsembleOptions) -> Result<Ensemble> {
    if options.trials == 0 {
        return Err(invalid("trials", "must be >= 1"));
    }
    policy.validate()?;
    let run = || {
        (0..options.trials)
            .into_par_iter()
            .map(|t| {
                let seed = split_seed(options.master_seed, t as u64);
                run_single_shot(
                    spec,
                    policy,
                    options.grid_size,
                    trial_phase(options.phase_mode, seed),
                    seed,
                )
            })
            .collect::<Vec<_>>()
    };
    let outcomes = match options.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| invalid("threads", e.to_string()))?
            .install(run),
        None => run(),
    };

    let mut records = Vec::with_capacity(outcomes.len());
    let mut exclusions = Vec::new();
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(record) => records.push(record),
            Err(e) => exclusions.push((t, e)),
        }
    }
    if exclusions.len() as f64 > MAX_EXCLUDED_FRACTION * options.trials as f64 {
        return Err(Error::TooManyExclusions {
            excluded: exclusions.len(),
            trials: options.trials,
        });
    }
    let mut result = summarize(&records, options.master_seed, options.bootstrap_resamples)?;
    result.excluded = exclusions.len();
    Ok(Ensemble {
        result,
        records,
        exclusions,
    })
}

/// Holevo variance with a percentile-bootstrap 1σ error.
///
/// Resampling reuses one set of indices per replicate for every prefix of
/// the trajectory, and `σ = (q84.13 − q15.87)/2` of the replicates.
pub fn summarize(records: &[TrialRecord], master_seed: u64, resamples: usize) -> Result<EnsembleResult> {
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    let steps = records[0].steps.len();
    if records.iter().any(|r| r.steps.len() != steps) {
        return Err(invalid("records", "trials have different step counts"));
    }
    // unit vectors e^{iδ} per (step, trial)
    let unit: Vec<Vec<(f64, f64)>> = (0..steps)
        .map(|l| {
            records
                .iter()
                .map(|r| {
                    let (s, c) = (r.steps[l].map_estimate - r.true_phase).sin_cos();
                    (c, s)
                })
                .collect()
        })
        .collect();
    let variance_of = |sum: (f64, f64), n: usize| {
        let r = sum.0.hypot(sum.1) / n as f64;
        if r <= 1e-12 {
            f64::INFINITY
        } else {
            (1.0 / (r * r) - 1.0).max(0.0)
        }
    };

    let n = records.len();
    let mut replicates = vec![Vec::with_capacity(resamples); steps];
    if n > 1 && resamples > 0 {
        let mut rng = stream(split_seed(master_seed, u64::MAX), 0);
        let indices: Vec<usize> = (0..n).collect();
        let mut draw = vec![0usize; n];
        for _ in 0..resamples {
            for slot in draw.iter_mut() {
                *slot = *indices.choose(&mut rng).expect("nonempty");
            }
            for (l, vectors) in unit.iter().enumerate() {
                let sum = draw
                    .iter()
                    .fold((0.0, 0.0), |(c, s), &i| (c + vectors[i].0, s + vectors[i].1));
                replicates[l].push(variance_of(sum, n));
            }
        }
    }
    let per_step: Vec<StepStatistic> = unit
        .iter()
        .zip(replicates.iter_mut())
        .enumerate()
        .map(|(l, (vectors, reps))| {
            let sum = vectors.iter().fold((0.0, 0.0), |(c, s), v| (c + v.0, s + v.1));
            StepStatistic {
                step: l + 1,
                holevo_variance: variance_of(sum, n),
                holevo_stderr: percentile_sigma(reps),
            }
        })
        .collect();

    let errors: Vec<f64> = records.iter().map(TrialRecord::error).collect();
    let deltas: Vec<f64> = records.iter().map(|r| r.last_step().delta_design).collect();
    let last = per_step.last().copied().expect("at least one step");
    Ok(EnsembleResult {
        trials: n,
        excluded: 0,
        holevo_variance: holevo_variance(&errors)?,
        holevo_stderr: last.holevo_stderr,
        mean_delta_design_final: circular_mean(&deltas).map_or(f64::NAN, wrap_signed),
        per_step,
    })
}

fn percentile_sigma(replicates: &mut [f64]) -> f64 {
    if replicates.len() < 2 {
        return 0.0;
    }
    replicates.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (replicates.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        replicates[lo] * (1.0 - frac) + replicates[hi] * frac
    };
    let sigma = 0.5 * (q(0.841_344_746) - q(0.158_655_254));
    if sigma.is_finite() {
        sigma.max(0.0)
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_record_structure() {
        let spec = ProbeSpec::new(1.0, 1, 1).unwrap();
        let r = run_single_shot(&spec, &DesignPolicy::default(), 128, 2.0, 11).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.final_estimate, r.steps[0].map_estimate);
    }

    #[test]
    fn vacuum_never_learns() {
        let spec = ProbeSpec::new(0.0, 5, 3).unwrap();
        let r = run_single_shot(&spec, &DesignPolicy::default(), 64, 1.0, 3).unwrap();
        assert!(r.steps.iter().all(|s| s.map_estimate == 0.0 && s.outcome == 0));
        assert_eq!(r.final_estimate, 0.0);
    }

    #[test]
    fn replay_is_bit_identical() {
        let spec = ProbeSpec::new(1.0, 12, 3).unwrap();
        let policy = DesignPolicy::default();
        let a = run_single_shot(&spec, &policy, 256, 4.1, 99).unwrap();
        let b = run_single_shot(&spec, &policy, 256, 4.1, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_trial_ensemble_has_zero_stderr() {
        let spec = ProbeSpec::new(1.0, 3, 1).unwrap();
        let mut opts = EnsembleOptions::new(1, 5);
        opts.grid_size = 64;
        let e = run_ensemble(&spec, &DesignPolicy::default(), &opts).unwrap();
        assert_eq!(e.result.trials, 1);
        assert_eq!(e.result.holevo_stderr, 0.0);
        // a single unit vector always has resultant length one
        assert!(e.result.holevo_variance.abs() < 1e-12);
    }

    #[test]
    fn phase_mode_parsing() {
        assert_eq!("random".parse::<PhaseMode>().unwrap(), PhaseMode::RandomUniform);
        assert_eq!("fixed:1.5".parse::<PhaseMode>().unwrap(), PhaseMode::Fixed(1.5));
        assert!("fixed:abc".parse::<PhaseMode>().is_err());
        assert!(run_ensemble(
            &ProbeSpec::new(1.0, 1, 1).unwrap(),
            &DesignPolicy::default(),
            &EnsembleOptions::new(0, 0)
        )
        .is_err());
    }
}
