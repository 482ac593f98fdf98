//! Grid posterior over the circle and the functionals computed from it.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::angle::wrap_positive;
use crate::error::{invalid, Error, Result};
use crate::model::{fill_bucket_pmf, mean_from_cos, DisplacementDesign, Outcome, ProbeSpec};

pub const DEFAULT_GRID_SIZE: usize = 1024;

/// Likelihood mass below which an update is treated as degenerate.
pub const DEGENERATE_MASS: f64 = 1e-300;

/// Equally spaced phases `φ_j = 2πj/N` with cached trigonometric tables.
#[derive(Debug, PartialEq)]
pub(crate) struct Grid {
    pub(crate) cos: Vec<f64>,
    pub(crate) sin: Vec<f64>,
}

impl Grid {
    fn new(size: usize) -> Self {
        let (cos, sin) = (0..size)
            .map(|j| {
                let phi = TAU * j as f64 / size as f64;
                (phi.cos(), phi.sin())
            })
            .unzip();
        Self { cos, sin }
    }

    fn len(&self) -> usize {
        self.cos.len()
    }
}

fn validate_grid_size(size: usize) -> Result<()> {
    if size < 8 || !size.is_power_of_two() {
        return Err(invalid("grid_size", format!("must be a power of two >= 8, got {size}")));
    }
    Ok(())
}

/// Discretized probability distribution over `φ ∈ [0, 2π)`.
#[derive(Debug, Clone)]
pub struct PhasePosterior {
    grid: Arc<Grid>,
    weights: Vec<f64>,
}

impl PartialEq for PhasePosterior {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
    }
}

/// First circular moment of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularMoment {
    /// Sharpness `|E e^{iφ}|`.
    pub magnitude: f64,
    /// Mean direction `arg E e^{iφ}`.
    pub angle: f64,
}

/// Information-theoretic design functionals over the outcome alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoFunctionals {
    pub outcome_probabilities: Vec<f64>,
    /// `KL[p(φ|n) ‖ p(φ)]` for every outcome `n` (0 for impossible outcomes).
    pub kl_per_outcome: Vec<f64>,
    /// `H(φ | Y)` in nats.
    pub conditional_entropy: f64,
    /// `H(prior) − H(φ | Y)`.
    pub mutual_information: f64,
    /// `E_n KL[p(φ|n) ‖ p(φ)]`, the second route to the same quantity.
    pub expected_kl: f64,
}

impl PhasePosterior {
    /// Flat prior on `grid_size` points.
    pub fn uniform(grid_size: usize) -> Result<Self> {
        validate_grid_size(grid_size)?;
        Ok(Self {
            grid: Arc::new(Grid::new(grid_size)),
            weights: vec![1.0 / grid_size as f64; grid_size],
        })
    }

    /// Normalizes arbitrary nonnegative weights into a posterior.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        validate_grid_size(weights.len())?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("weights", "total mass must be positive"));
        }
        Ok(Self {
            grid: Arc::new(Grid::new(weights.len())),
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    /// Samples an unnormalized density at the grid phases.
    pub fn from_density(grid_size: usize, density: impl Fn(f64) -> f64) -> Result<Self> {
        validate_grid_size(grid_size)?;
        let step = TAU / grid_size as f64;
        Self::from_weights((0..grid_size).map(|j| density(step * j as f64)).collect())
    }

    /// Unit mass on grid index `index`.
    pub fn point_mass(grid_size: usize, index: usize) -> Result<Self> {
        validate_grid_size(grid_size)?;
        let mut weights = vec![0.0; grid_size];
        weights[index % grid_size] = 1.0;
        Self::from_weights(weights)
    }

    pub fn grid_size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid_spacing(&self) -> f64 {
        TAU / self.grid_size() as f64
    }

    pub fn grid_phase(&self, index: usize) -> f64 {
        self.grid_spacing() * (index % self.grid_size()) as f64
    }

    pub(crate) fn grid(&self) -> &Grid {
        &self.grid
    }

    /// The same distribution shifted by `shift` grid cells.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.grid_size();
        let mut weights = vec![0.0; n];
        for (j, w) in self.weights.iter().enumerate() {
            weights[(j + shift) % n] = *w;
        }
        Self {
            grid: Arc::clone(&self.grid),
            weights,
        }
    }

    /// Outcome likelihood `p(outcome | φ_j; β)` at every grid phase.
    pub fn likelihood(&self, spec: &ProbeSpec, design: &DisplacementDesign, outcome: Outcome) -> Vec<f64> {
        let a = spec.step_amplitude();
        let b = design.magnitude();
        let (ct, st) = (design.theta().cos(), design.theta().sin());
        let mut pmf = vec![0.0; spec.alphabet_size()];
        let grid = self.grid();
        (0..grid.len())
            .map(|j| {
                let cos_diff = grid.cos[j] * ct + grid.sin[j] * st;
                fill_bucket_pmf(mean_from_cos(a, b, cos_diff), spec.pnr(), &mut pmf);
                pmf[outcome.count()]
            })
            .collect()
    }

    /// Bayes' rule with the detector likelihood, followed by renormalization.
    pub fn bayes_update(&self, spec: &ProbeSpec, design: &DisplacementDesign, outcome: Outcome) -> Result<Self> {
        if outcome.count() > spec.pnr() {
            return Err(invalid("outcome", "outside the detector alphabet"));
        }
        let likelihood = self.likelihood(spec, design, outcome);
        let mut weights: Vec<f64> = self.weights.iter().zip(&likelihood).map(|(w, l)| w * l).collect();
        let total: f64 = weights.iter().sum();
        let peak = likelihood.iter().copied().fold(0.0, f64::max);
        if peak < DEGENERATE_MASS || !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateLikelihood);
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            grid: Arc::clone(&self.grid),
            weights,
        })
    }

    /// Maximum a posteriori phase, refined by a parabola through the
    /// discrete argmax and its two neighbours. Ties go to the lowest index.
    pub fn map_estimate(&self) -> f64 {
        let n = self.grid_size();
        let mut best = 0;
        for (j, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = j;
            }
        }
        let left = self.weights[(best + n - 1) % n];
        let centre = self.weights[best];
        let right = self.weights[(best + 1) % n];
        let curvature = left - 2.0 * centre + right;
        let offset = if curvature < 0.0 {
            (0.5 * (left - right) / curvature).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        wrap_positive(self.grid_spacing() * (best as f64 + offset))
    }

    pub fn circular_moment(&self) -> CircularMoment {
        let grid = self.grid();
        let (re, im) = self.weights.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, w)| {
            (re + w * grid.cos[j], im + w * grid.sin[j])
        });
        CircularMoment {
            magnitude: re.hypot(im),
            angle: wrap_positive(im.atan2(re)),
        }
    }

    /// Discrete Shannon entropy of the grid weights, in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.weights)
    }

    /// `KL[self ‖ reference]` over the grid, in nats.
    pub fn kl_divergence(&self, reference: &PhasePosterior) -> f64 {
        kl(&self.weights, &reference.weights)
    }

    /// KL, conditional entropy and mutual information of a design.
    pub fn info_functionals(&self, spec: &ProbeSpec, design: &DisplacementDesign) -> Result<InfoFunctionals> {
        let outcomes = spec.alphabet_size();
        let mut outcome_probabilities = Vec::with_capacity(outcomes);
        let mut kl_per_outcome = Vec::with_capacity(outcomes);
        let mut conditional_entropy = 0.0;
        for count in 0..outcomes {
            let outcome = Outcome::new(count, spec.pnr())?;
            let joint: Vec<f64> = self
                .weights
                .iter()
                .zip(self.likelihood(spec, design, outcome))
                .map(|(w, l)| w * l)
                .collect();
            let marginal: f64 = joint.iter().sum();
            outcome_probabilities.push(marginal);
            if marginal <= 0.0 {
                kl_per_outcome.push(0.0);
                continue;
            }
            let posterior: Vec<f64> = joint.iter().map(|u| u / marginal).collect();
            kl_per_outcome.push(kl(&posterior, &self.weights));
            conditional_entropy += marginal * entropy(&posterior);
        }
        if outcome_probabilities.iter().all(|p| *p < DEGENERATE_MASS) {
            return Err(Error::DegenerateLikelihood);
        }
        let expected_kl = outcome_probabilities
            .iter()
            .zip(&kl_per_outcome)
            .map(|(p, k)| p * k)
            .sum();
        Ok(InfoFunctionals {
            mutual_information: self.entropy() - conditional_entropy,
            outcome_probabilities,
            kl_per_outcome,
            conditional_entropy,
            expected_kl,
        })
    }
}

fn entropy(weights: &[f64]) -> f64 {
    -weights.iter().filter(|w| **w > 0.0).map(|w| w * w.ln()).sum::<f64>()
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).ln())
        .sum()
}

/// Holevo variance `1/|E e^{iδ}|² − 1` of a sample of estimation errors.
///
/// Returns `f64::INFINITY` when the mean resultant length is zero (below
/// 1e-12, far under the `1/√n` noise floor of any practical sample).
pub fn holevo_variance(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptySample);
    }
    let r = mean_resultant_length(errors);
    if r <= 1e-12 {
        Ok(f64::INFINITY)
    } else {
        Ok((1.0 / (r * r) - 1.0).max(0.0))
    }
}

pub(crate) fn mean_resultant_length(errors: &[f64]) -> f64 {
    let (s, c) = errors.iter().fold((0.0, 0.0), |(s, c), d| (s + d.sin(), c + d.cos()));
    s.hypot(c) / errors.len() as f64
}
