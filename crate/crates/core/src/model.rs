//! Displaced coherent-state photon statistics under bucketed
//! photon-number-resolving detection.
//!
//! Each adaptive step probes the weak field `α e^{iφ}/√L`. After a
//! displacement by `-β` the detector sees a coherent state whose photon
//! number is Poisson with mean
//! `λ = α²/L + |β|² − 2α|β|cos(φ−θ)/√L`. A PNR(m) detector resolves counts
//! `0..m` and lumps everything else into an overflow bucket.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::wrap_positive;
use crate::error::{invalid, Result};

/// Physical parameters of one single-shot experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    alpha: f64,
    steps: usize,
    pnr: usize,
}

impl ProbeSpec {
    /// `alpha` is the field amplitude, so the mean photon number is `alpha²`.
    pub fn new(alpha: f64, steps: usize, pnr: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid("alpha", format!("must be finite and >= 0, got {alpha}")));
        }
        if steps == 0 {
            return Err(invalid("steps", "must be >= 1"));
        }
        if pnr == 0 {
            return Err(invalid("pnr", "must be >= 1"));
        }
        Ok(Self { alpha, steps, pnr })
    }

    pub fn from_mean_photons(alpha_sq: f64, steps: usize, pnr: usize) -> Result<Self> {
        if !(alpha_sq.is_finite() && alpha_sq >= 0.0) {
            return Err(invalid("alpha_sq", format!("must be finite and >= 0, got {alpha_sq}")));
        }
        Self::new(alpha_sq.sqrt(), steps, pnr)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mean_photons(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn pnr(&self) -> usize {
        self.pnr
    }

    /// Amplitude reaching the detector in one step, `α/√L`.
    pub fn step_amplitude(&self) -> f64 {
        self.alpha / (self.steps as f64).sqrt()
    }

    /// Mean photon number spent per step, `α²/L`.
    pub fn step_energy(&self) -> f64 {
        self.mean_photons() / self.steps as f64
    }

    /// Size of the outcome alphabet, `m + 1`.
    pub fn alphabet_size(&self) -> usize {
        self.pnr + 1
    }
}

/// Displacement `β = |β| e^{iθ}` applied before detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementDesign {
    theta: f64,
    magnitude: f64,
}

impl DisplacementDesign {
    pub fn new(theta: f64, magnitude: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(invalid(
                "magnitude",
                format!("must be finite and >= 0, got {magnitude}"),
            ));
        }
        Ok(Self {
            theta: wrap_positive(theta),
            magnitude,
        })
    }

    /// No displacement at all.
    pub fn none() -> Self {
        Self {
            theta: 0.0,
            magnitude: 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }
}

/// A detector click count; `count == pnr` is the overflow bucket `≥ pnr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Outcome(usize);

impl Outcome {
    pub fn new(count: usize, pnr: usize) -> Result<Self> {
        if count > pnr {
            return Err(invalid("outcome", format!("{count} exceeds pnr {pnr}")));
        }
        Ok(Self(count))
    }

    pub fn count(&self) -> usize {
        self.0
    }

    pub fn is_overflow(&self, pnr: usize) -> bool {
        self.0 == pnr
    }
}

/// Poisson mean of the displaced field at true phase `phi`.
pub fn poisson_mean(spec: &ProbeSpec, design: &DisplacementDesign, phi: f64) -> f64 {
    let a = spec.step_amplitude();
    let b = design.magnitude();
    mean_from_cos(a, b, (phi - design.theta()).cos())
}

#[inline]
pub(crate) fn mean_from_cos(a: f64, b: f64, cos_diff: f64) -> f64 {
    // (a - b)² + 2ab(1 - cos) keeps exact nulling exact
    let d = a - b;
    (d * d + 2.0 * a * b * (1.0 - cos_diff)).max(0.0)
}

const LN_FACTORIAL_TABLE_LEN: usize = 21;

/// `ln k!`, exact table up to 20 and log-gamma beyond.
pub fn ln_factorial(k: usize) -> f64 {
    if k < LN_FACTORIAL_TABLE_LEN {
        (2..=k).map(|i| (i as f64).ln()).sum()
    } else {
        statrs::function::gamma::ln_gamma(k as f64 + 1.0)
    }
}

// e^{-λ} underflows shortly after 745; switch to logs well before that.
const LINEAR_DOMAIN_MAX_MEAN: f64 = 600.0;

/// Fills `out[0..=pnr]` with the bucketed Poisson pmf of mean `lambda`.
///
/// The overflow entry is either `1 − head` or, when the head carries more
/// than 90% of the mass, the tail series summed directly so that small
/// overflow probabilities keep full relative precision.
pub fn fill_bucket_pmf(lambda: f64, pnr: usize, out: &mut [f64]) {
    debug_assert!(out.len() > pnr);
    let lambda = lambda.max(0.0);
    if lambda == 0.0 {
        out[..=pnr].fill(0.0);
        out[0] = 1.0;
        return;
    }
    let mut head = 0.0;
    let mut last;
    if lambda <= LINEAR_DOMAIN_MAX_MEAN {
        let mut p = (-lambda).exp();
        out[0] = p;
        head += p;
        for (k, slot) in out.iter_mut().enumerate().take(pnr).skip(1) {
            p *= lambda / k as f64;
            *slot = p;
            head += p;
        }
        last = p;
    } else {
        let ln_lambda = lambda.ln();
        for (k, slot) in out.iter_mut().enumerate().take(pnr) {
            *slot = (-lambda + k as f64 * ln_lambda - ln_factorial(k)).exp();
            head += *slot;
        }
        last = out[pnr - 1];
    }
    out[pnr] = if head < 0.9 || last == 0.0 {
        (1.0 - head).max(0.0)
    } else {
        let mut tail = 0.0;
        let mut k = pnr;
        loop {
            last *= lambda / k as f64;
            tail += last;
            if last <= 1e-17 * tail {
                break;
            }
            k += 1;
        }
        tail
    };
}

/// Probability of every outcome in the PNR(m) alphabet.
pub fn outcome_pmf(spec: &ProbeSpec, design: &DisplacementDesign, phi: f64) -> Vec<f64> {
    let mut out = vec![0.0; spec.alphabet_size()];
    fill_bucket_pmf(poisson_mean(spec, design, phi), spec.pnr(), &mut out);
    out
}

/// Draws one detector outcome by inverse-CDF sampling of a single uniform.
pub fn sample_outcome<R: Rng + ?Sized>(
    spec: &ProbeSpec,
    design: &DisplacementDesign,
    phi: f64,
    rng: &mut R,
) -> Outcome {
    let pmf = outcome_pmf(spec, design, phi);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in pmf.iter().take(spec.pnr()).enumerate() {
        acc += p;
        if u < acc {
            return Outcome(k);
        }
    }
    Outcome(spec.pnr())
}
