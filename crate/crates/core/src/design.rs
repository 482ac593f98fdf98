//! Per-step choice of the displacement design.
//!
//! The magnitude `|β|` is slaved to the phase `θ` through the
//! Fisher-optimal rule evaluated at the current MAP estimate, so the only
//! free variable is `θ`. It is picked by maximizing the policy's expected
//! cost over a coarse grid, then polished with a golden-section search.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::wrap_positive;
use crate::error::{invalid, Error, Result};
use crate::fastmath::{exp_nonpositive, ln_positive};
use crate::model::{fill_bucket_pmf, ln_factorial, mean_from_cos, DisplacementDesign, Outcome, ProbeSpec};
use crate::posterior::PhasePosterior;

/// Expected utility maximized over designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostFunction {
    ExpectedSharpness,
    MutualInformation,
}

impl std::str::FromStr for CostFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharpness" | "expected_sharpness" => Ok(Self::ExpectedSharpness),
            "mi" | "mutual_information" => Ok(Self::MutualInformation),
            other => Err(invalid("cost", format!("unknown cost function `{other}`"))),
        }
    }
}

impl std::fmt::Display for CostFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ExpectedSharpness => "sharpness",
            Self::MutualInformation => "mi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignPolicy {
    pub cost_function: CostFunction,
    /// Number of equally spaced coarse `θ` candidates.
    pub theta_candidates: usize,
    /// Golden-section iterations around the best coarse candidate.
    pub refine_iters: usize,
    /// Floor on `|cos(φ̂ − θ)|`, capping `|β|` at `α/(√L ε)`.
    pub beta_cap_epsilon: f64,
}

impl Default for DesignPolicy {
    fn default() -> Self {
        Self {
            cost_function: CostFunction::ExpectedSharpness,
            theta_candidates: 32,
            refine_iters: 20,
            beta_cap_epsilon: 0.05,
        }
    }
}

impl DesignPolicy {
    pub fn with_cost(cost_function: CostFunction) -> Self {
        Self {
            cost_function,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_candidates < 4 {
            return Err(invalid("theta_candidates", "must be >= 4"));
        }
        if !(self.beta_cap_epsilon > 0.0 && self.beta_cap_epsilon <= 0.5) {
            return Err(invalid("beta_cap_epsilon", "must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

/// Fisher information about `φ` carried by one outcome of `design`.
pub fn fisher_information(spec: &ProbeSpec, design: &DisplacementDesign, phi: f64) -> Result<f64> {
    let alpha = spec.alpha();
    let beta = design.magnitude();
    let steps = spec.steps() as f64;
    let diff = phi - design.theta();
    let denominator = alpha * alpha + steps * beta * beta - 2.0 * alpha * beta * diff.cos() * steps.sqrt();
    if denominator <= 1e-15 {
        return Err(Error::NullingSingularity { denominator });
    }
    let s = diff.sin();
    Ok(4.0 * alpha * alpha * beta * beta * s * s / denominator)
}

/// Fisher-optimal `|β|` for phase `theta` given the current estimate,
/// with `|cos(φ̂ − θ)|` floored at the policy's epsilon.
pub fn optimal_beta_magnitude(spec: &ProbeSpec, theta: f64, phi_hat: f64, policy: &DesignPolicy) -> f64 {
    let c = (phi_hat - theta).cos().abs().max(policy.beta_cap_epsilon);
    spec.step_amplitude() / c
}

const LANES: usize = 4;
// Floor for logarithm arguments whose coefficient is then exactly zero.
const TINY: f64 = 1e-300;

/// Precomputed view of a prior for repeated cost evaluations.
///
/// Grid points whose weight is below 1e-18 of the peak are dropped; their
/// total contribution to any functional is below `N · 1e-18`.
struct CostEvaluator {
    weights: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    pmf: Vec<f64>,
    ln_factorials: Vec<f64>,
    moment: (f64, f64),
    total: f64,
    lambda: Vec<f64>,
    mass: Vec<f64>,
    amplitude: f64,
    pnr: usize,
}

impl CostEvaluator {
    fn new(prior: &PhasePosterior, spec: &ProbeSpec) -> Self {
        let peak = prior.weights().iter().copied().fold(0.0, f64::max);
        let cutoff = peak * 1e-18;
        let grid = prior.grid();
        let mut weights = Vec::new();
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for (j, w) in prior.weights().iter().enumerate() {
            if *w > cutoff {
                weights.push(*w);
                cos.push(grid.cos[j]);
                sin.push(grid.sin[j]);
            }
        }
        let moment = weights
            .iter()
            .zip(cos.iter().zip(&sin))
            .fold((0.0, 0.0), |(re, im), (w, (c, s))| (re + w * c, im + w * s));
        // pad to whole lanes with zero-weight points
        while weights.len() % LANES != 0 {
            weights.push(0.0);
            cos.push(0.0);
            sin.push(0.0);
        }
        let support = weights.len();
        Self {
            moment,
            total: weights.iter().sum(),
            lambda: vec![0.0; support],
            mass: vec![0.0; support],
            weights,
            cos,
            sin,
            pmf: vec![0.0; spec.alphabet_size()],
            ln_factorials: (0..spec.pnr()).map(ln_factorial).collect(),
            amplitude: spec.step_amplitude(),
            pnr: spec.pnr(),
        }
    }

    /// `Σ_n |Σ_j w_j p(n|φ_j) e^{iφ_j}|`, i.e. `Σ_n p(n) |E[e^{iφ} | n]|`.
    ///
    /// Only the resolved counts are accumulated; the overflow bucket's
    /// moment is the prior moment minus theirs.
    fn expected_sharpness(&mut self, design: &DisplacementDesign) -> f64 {
        let (ct, st) = (design.theta().cos(), design.theta().sin());
        let b = design.magnitude();
        match self.pnr {
            1 => self.sharpness_kernel::<1>(b, ct, st),
            2 => self.sharpness_kernel::<2>(b, ct, st),
            3 => self.sharpness_kernel::<3>(b, ct, st),
            4 => self.sharpness_kernel::<4>(b, ct, st),
            5 => self.sharpness_kernel::<5>(b, ct, st),
            6 => self.sharpness_kernel::<6>(b, ct, st),
            7 => self.sharpness_kernel::<7>(b, ct, st),
            8 => self.sharpness_kernel::<8>(b, ct, st),
            _ => self.sharpness_generic(b, ct, st),
        }
    }

    /// Fills `lambda` and `mass = w · e^{−λ}` for every support point.
    #[inline(always)]
    fn fill_means_portable(&mut self, b: f64, ct: f64, st: f64) {
        let a = self.amplitude;
        for ((((w, c), s), lambda), mass) in self
            .weights
            .iter()
            .zip(&self.cos)
            .zip(&self.sin)
            .zip(self.lambda.iter_mut())
            .zip(self.mass.iter_mut())
        {
            let l = mean_from_cos(a, b, c * ct + s * st);
            *lambda = l;
            *mass = w * exp_nonpositive(-l);
        }
    }

    /// Per-lane partial sums of `mass · λⁿ/n! · e^{iφ}` over the support.
    ///
    /// Point `j` always lands in lane `j % LANES`, so the result does not
    /// depend on how the loop is compiled.
    #[inline(always)]
    fn moment_sums_portable<const M: usize>(&self) -> [(f64, f64); M] {
        let mut re = [[0.0; LANES]; M];
        let mut im = [[0.0; LANES]; M];
        let mut inv = [0.0; M];
        for (n, slot) in inv.iter_mut().enumerate().skip(1) {
            *slot = 1.0 / n as f64;
        }
        let chunks = self
            .mass
            .chunks_exact(LANES)
            .zip(self.lambda.chunks_exact(LANES))
            .zip(self.cos.chunks_exact(LANES).zip(self.sin.chunks_exact(LANES)));
        for ((mass, lambda), (c, s)) in chunks {
            let mut u = [0.0; LANES];
            u.copy_from_slice(mass);
            for n in 0..M {
                for k in 0..LANES {
                    if n > 0 {
                        u[k] *= lambda[k] * inv[n];
                    }
                    re[n][k] += u[k] * c[k];
                    im[n][k] += u[k] * s[k];
                }
            }
        }
        let mut out = [(0.0, 0.0); M];
        for n in 0..M {
            for k in 0..LANES {
                out[n].0 += re[n][k];
                out[n].1 += im[n][k];
            }
        }
        out
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn fill_means_avx2(&mut self, b: f64, ct: f64, st: f64) {
        self.fill_means_portable(b, ct, st)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn moment_sums_avx2<const M: usize>(&self) -> [(f64, f64); M] {
        self.moment_sums_portable::<M>()
    }

    fn sharpness_kernel<const M: usize>(&mut self, b: f64, ct: f64, st: f64) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            let sums = unsafe {
                self.fill_means_avx2(b, ct, st);
                self.moment_sums_avx2::<M>()
            };
            return self.combine(sums.into_iter());
        }
        self.fill_means_portable(b, ct, st);
        let sums = self.moment_sums_portable::<M>();
        self.combine(sums.into_iter())
    }

    fn sharpness_generic(&mut self, b: f64, ct: f64, st: f64) -> f64 {
        let m = self.pnr;
        let mut head = vec![(0.0, 0.0); m];
        for j in 0..self.weights.len() {
            let (c, s) = (self.cos[j], self.sin[j]);
            let lambda = mean_from_cos(self.amplitude, b, c * ct + s * st);
            let mut u = self.weights[j] * (-lambda).exp();
            for (n, acc) in head.iter_mut().enumerate() {
                if n > 0 {
                    u *= lambda / n as f64;
                }
                acc.0 += u * c;
                acc.1 += u * s;
            }
        }
        self.combine(head.into_iter())
    }

    fn combine(&self, head: impl Iterator<Item = (f64, f64)>) -> f64 {
        let (mut re, mut im) = self.moment;
        let mut total = 0.0;
        for (a, b) in head {
            re -= a;
            im -= b;
            total += a.hypot(b);
        }
        total + re.hypot(im)
    }

    /// `H(Y) − H(Y | φ)`, equal to `H(prior) − H(φ | Y)`.
    fn mutual_information(&mut self, design: &DisplacementDesign) -> f64 {
        let (ct, st) = (design.theta().cos(), design.theta().sin());
        let b = design.magnitude();
        match self.pnr {
            1 => self.information_kernel::<1>(b, ct, st),
            2 => self.information_kernel::<2>(b, ct, st),
            3 => self.information_kernel::<3>(b, ct, st),
            4 => self.information_kernel::<4>(b, ct, st),
            5 => self.information_kernel::<5>(b, ct, st),
            6 => self.information_kernel::<6>(b, ct, st),
            7 => self.information_kernel::<7>(b, ct, st),
            8 => self.information_kernel::<8>(b, ct, st),
            _ => self.information_generic(b, ct, st),
        }
    }

    /// Fills `lambda` and the unweighted `e^{−λ}` (into `mass`).
    #[inline(always)]
    fn fill_decay_portable(&mut self, b: f64, ct: f64, st: f64) {
        let a = self.amplitude;
        for (((c, s), lambda), decay) in self
            .cos
            .iter()
            .zip(&self.sin)
            .zip(self.lambda.iter_mut())
            .zip(self.mass.iter_mut())
        {
            let l = mean_from_cos(a, b, c * ct + s * st);
            *lambda = l;
            *decay = exp_nonpositive(-l);
        }
    }

    /// Weighted resolved-count probabilities and `Σ_j w_j H(Y | φ_j)`.
    ///
    /// Per point, `ln p_n = −λ + n ln λ − ln n!` for the resolved counts, so
    /// only `ln λ` and the overflow logarithm are evaluated.
    #[inline(always)]
    fn information_sums_portable<const M: usize>(&self) -> ([f64; M], f64) {
        let mut marginal = [[0.0; LANES]; M];
        let mut conditional = [0.0; LANES];
        let mut inv = [0.0; M];
        let mut ln_fact = [0.0; M];
        for n in 0..M {
            inv[n] = if n > 0 { 1.0 / n as f64 } else { 0.0 };
            ln_fact[n] = self.ln_factorials[n];
        }
        let chunks = self
            .weights
            .chunks_exact(LANES)
            .zip(self.lambda.chunks_exact(LANES))
            .zip(self.mass.chunks_exact(LANES));
        for ((w, lambda), decay) in chunks {
            let mut p = [0.0; LANES];
            let mut head = [0.0; LANES];
            let mut weighted_ln_fact = [0.0; LANES];
            p.copy_from_slice(decay);
            for n in 0..M {
                for k in 0..LANES {
                    if n > 0 {
                        p[k] *= lambda[k] * inv[n];
                    }
                    head[k] += p[k];
                    weighted_ln_fact[k] += p[k] * ln_fact[n];
                    marginal[n][k] += w[k] * p[k];
                }
            }
            for k in 0..LANES {
                let l = lambda[k];
                let over = (1.0 - head[k]).max(0.0);
                // Σ_{n<m} n p_n = λ (head − p_{m−1})
                let first_moment = l * (head[k] - p[k]);
                let h = l * head[k] - ln_positive(l.max(TINY)) * first_moment + weighted_ln_fact[k]
                    - over * ln_positive(over.max(TINY));
                conditional[k] += w[k] * h;
            }
        }
        let mut out = [0.0; M];
        for n in 0..M {
            for k in 0..LANES {
                out[n] += marginal[n][k];
            }
        }
        (out, conditional.iter().sum())
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn fill_decay_avx2(&mut self, b: f64, ct: f64, st: f64) {
        self.fill_decay_portable(b, ct, st)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn information_sums_avx2<const M: usize>(&self) -> ([f64; M], f64) {
        self.information_sums_portable::<M>()
    }

    fn information_kernel<const M: usize>(&mut self, b: f64, ct: f64, st: f64) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            let (head, conditional) = unsafe {
                self.fill_decay_avx2(b, ct, st);
                self.information_sums_avx2::<M>()
            };
            return self.entropy_gap(&head, conditional);
        }
        self.fill_decay_portable(b, ct, st);
        let (head, conditional) = self.information_sums_portable::<M>();
        self.entropy_gap(&head, conditional)
    }

    fn information_generic(&mut self, b: f64, ct: f64, st: f64) -> f64 {
        let m = self.pnr;
        let mut head = vec![0.0; m];
        let mut conditional = 0.0;
        for j in 0..self.weights.len() {
            let lambda = mean_from_cos(self.amplitude, b, self.cos[j] * ct + self.sin[j] * st);
            fill_bucket_pmf(lambda, m, &mut self.pmf);
            let w = self.weights[j];
            let ln_lambda = lambda.ln();
            let mut h = 0.0;
            for (n, p) in self.pmf.iter().enumerate() {
                if *p <= 0.0 {
                    continue;
                }
                let ln_p = if n < m {
                    -lambda + n as f64 * ln_lambda - self.ln_factorials[n]
                } else {
                    p.ln()
                };
                h -= p * ln_p;
                if n < m {
                    head[n] += w * p;
                }
            }
            conditional += w * h;
        }
        self.entropy_gap(&head, conditional)
    }

    /// Marginal outcome entropy minus `conditional`; the overflow
    /// probability is the kept mass minus the resolved ones.
    fn entropy_gap(&self, head: &[f64], conditional: f64) -> f64 {
        let plogp = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
        let overflow = self.total - head.iter().sum::<f64>();
        head.iter().map(|&q| plogp(q)).sum::<f64>() + plogp(overflow) - conditional
    }

    fn evaluate(&mut self, cost: CostFunction, design: &DisplacementDesign) -> f64 {
        match cost {
            CostFunction::ExpectedSharpness => self.expected_sharpness(design),
            CostFunction::MutualInformation => self.mutual_information(design),
        }
    }
}

/// Average posterior sharpness over the full outcome alphabet.
pub fn expected_sharpness(prior: &PhasePosterior, spec: &ProbeSpec, design: &DisplacementDesign) -> Result<f64> {
    let value = CostEvaluator::new(prior, spec).expected_sharpness(design);
    if !value.is_finite() {
        return Err(Error::DegenerateLikelihood);
    }
    Ok(value)
}

/// Mutual information between phase and outcome for `design`.
pub fn mutual_information(prior: &PhasePosterior, spec: &ProbeSpec, design: &DisplacementDesign) -> Result<f64> {
    let value = CostEvaluator::new(prior, spec).mutual_information(design);
    if !value.is_finite() {
        return Err(Error::DegenerateLikelihood);
    }
    Ok(value)
}

// Any improvement smaller than this is treated as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// Chooses the next displacement.
///
/// With no estimate yet (`phi_hat == None`) the phase is a uniform random
/// guess. Otherwise the cost is scanned over `theta_candidates` phases
/// `2πk/K`, the best one (smallest `θ` on ties) is refined by golden-section
/// search on its neighbouring cell, and every `θ` is paired with
/// [`optimal_beta_magnitude`].
pub fn choose_design<R: Rng + ?Sized>(
    prior: &PhasePosterior,
    spec: &ProbeSpec,
    phi_hat: Option<f64>,
    policy: &DesignPolicy,
    rng: &mut R,
) -> Result<DisplacementDesign> {
    policy.validate()?;
    let Some(phi_hat) = phi_hat else {
        let theta = rng.random::<f64>() * TAU;
        let magnitude = optimal_beta_magnitude(spec, theta, prior.map_estimate(), policy);
        return DisplacementDesign::new(theta, magnitude);
    };

    let mut evaluator = CostEvaluator::new(prior, spec);
    let design_at = |theta: f64| {
        let theta = wrap_positive(theta);
        DisplacementDesign::new(theta, optimal_beta_magnitude(spec, theta, phi_hat, policy))
    };
    let cost_at = |evaluator: &mut CostEvaluator, theta: f64| -> Result<(DisplacementDesign, f64)> {
        let design = design_at(theta)?;
        let value = evaluator.evaluate(policy.cost_function, &design);
        if !value.is_finite() {
            return Err(Error::DegenerateLikelihood);
        }
        Ok((design, value))
    };

    let cell = TAU / policy.theta_candidates as f64;
    let mut best = cost_at(&mut evaluator, 0.0)?;
    let mut best_theta = 0.0;
    for k in 1..policy.theta_candidates {
        let theta = cell * k as f64;
        let candidate = cost_at(&mut evaluator, theta)?;
        if candidate.1 > best.1 + TIE_TOLERANCE {
            best = candidate;
            best_theta = theta;
        }
    }

    if policy.refine_iters > 0 {
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let (mut lo, mut hi) = (best_theta - cell, best_theta + cell);
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = cost_at(&mut evaluator, x1)?;
        let mut f2 = cost_at(&mut evaluator, x2)?;
        for _ in 0..policy.refine_iters {
            if f1.1 >= f2.1 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = cost_at(&mut evaluator, x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = cost_at(&mut evaluator, x2)?;
            }
        }
        let refined = if f1.1 >= f2.1 { f1 } else { f2 };
        if refined.1 > best.1 + TIE_TOLERANCE {
            best = refined;
        }
    }
    Ok(best.0)
}

/// Number of strict local maxima of the accumulated log-likelihood of a
/// measurement record over the grid; 1 means the record is identifiable.
pub fn log_likelihood_local_maxima(
    grid_size: usize,
    spec: &ProbeSpec,
    record: &[(DisplacementDesign, Outcome)],
) -> Result<usize> {
    let grid = PhasePosterior::uniform(grid_size)?;
    let mut total = vec![0.0; grid_size];
    for (design, outcome) in record {
        for (t, l) in total.iter_mut().zip(grid.likelihood(spec, design, *outcome)) {
            *t += l.ln();
        }
    }
    let n = grid_size;
    Ok((0..n)
        .filter(|&j| {
            let v = total[j];
            v.is_finite() && v > total[(j + n - 1) % n] && v >= total[(j + 1) % n]
        })
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    #[test]
    fn fisher_examples() {
        let spec = ProbeSpec::new(1.3, 3, 2).unwrap();
        let d = DisplacementDesign::new(0.4, 0.9).unwrap();
        assert!(fisher_information(&spec, &d, 0.4).unwrap().abs() < 1e-15);

        let opt = spec.alpha() / ((spec.steps() as f64).sqrt() * FRAC_PI_4.cos());
        let d = DisplacementDesign::new(0.2, opt).unwrap();
        let f = fisher_information(&spec, &d, 0.2 + FRAC_PI_4).unwrap();
        assert!((f - 4.0 * spec.mean_photons() / 3.0).abs() < 1e-12);

        let spec = ProbeSpec::new(1.0, 1, 1).unwrap();
        let null = DisplacementDesign::new(0.0, 1.0).unwrap();
        assert!(matches!(
            fisher_information(&spec, &null, 0.0),
            Err(Error::NullingSingularity { .. })
        ));
    }

    #[test]
    fn beta_magnitude_examples() {
        let spec = ProbeSpec::new(2.0, 4, 3).unwrap();
        let p = DesignPolicy::default();
        let base = spec.step_amplitude();
        assert!((optimal_beta_magnitude(&spec, 1.0, 1.0, &p) - base).abs() < 1e-15);
        assert!((optimal_beta_magnitude(&spec, 0.0, FRAC_PI_3, &p) - 2.0 * base).abs() < 1e-12);
        assert!((optimal_beta_magnitude(&spec, 0.0, FRAC_PI_2, &p) - 20.0 * base).abs() < 1e-12);
    }

    #[test]
    fn sharpness_examples() {
        let spec = ProbeSpec::new(1.0, 2, 3).unwrap();
        let uniform = PhasePosterior::uniform(256).unwrap();
        let s = expected_sharpness(&uniform, &spec, &DisplacementDesign::none()).unwrap();
        assert!(s.abs() < 1e-12);
        let point = PhasePosterior::point_mass(256, 40).unwrap();
        for theta in [0.0, 1.0, 4.0] {
            let d = DisplacementDesign::new(theta, 0.8).unwrap();
            assert!((expected_sharpness(&point, &spec, &d).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_mutual_information_matches_entropy_route() {
        let spec = ProbeSpec::new(1.4, 3, 3).unwrap();
        let prior = PhasePosterior::from_density(512, |p| (3.0 * (p - 2.0).cos()).exp()).unwrap();
        for (theta, beta) in [(0.3, 0.5), (2.5, 1.2), (4.0, 0.05)] {
            let d = DisplacementDesign::new(theta, beta).unwrap();
            let fast = mutual_information(&prior, &spec, &d).unwrap();
            let info = prior.info_functionals(&spec, &d).unwrap();
            assert!((fast - info.mutual_information).abs() < 1e-10);
        }
    }

    #[test]
    fn first_step_is_a_seeded_random_guess() {
        let spec = ProbeSpec::new(1.0, 10, 3).unwrap();
        let prior = PhasePosterior::uniform(64).unwrap();
        let p = DesignPolicy::default();
        let a = choose_design(&prior, &spec, None, &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = choose_design(&prior, &spec, None, &p, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let expected = optimal_beta_magnitude(&spec, a.theta(), 0.0, &p);
        assert!((a.magnitude() - expected).abs() < 1e-15);
    }

    #[test]
    fn point_mass_prior_ties_resolve_to_zero() {
        let spec = ProbeSpec::new(1.0, 10, 3).unwrap();
        let prior = PhasePosterior::point_mass(64, 20).unwrap();
        let phi_hat = prior.map_estimate();
        let p = DesignPolicy::default();
        let d = choose_design(&prior, &spec, Some(phi_hat), &p, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(d.theta(), 0.0);
    }

    #[test]
    fn rejects_invalid_policy() {
        let mut p = DesignPolicy::default();
        p.theta_candidates = 3;
        assert!(p.validate().is_err());
        p = DesignPolicy::default();
        p.beta_cap_epsilon = 0.0;
        assert!(p.validate().is_err());
        assert_eq!("mi".parse::<CostFunction>().unwrap(), CostFunction::MutualInformation);
        assert!("x".parse::<CostFunction>().is_err());
    }

    #[test]
    fn fixed_theta_record_is_not_identifiable() {
        let spec = ProbeSpec::new(4.5, 20, 3).unwrap();
        let truth = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fixed: Vec<_> = (0..20)
            .map(|_| {
                let d = DisplacementDesign::new(0.0, spec.step_amplitude()).unwrap();
                (d, crate::model::sample_outcome(&spec, &d, truth, &mut rng))
            })
            .collect();
        assert!(log_likelihood_local_maxima(512, &spec, &fixed).unwrap() >= 2);
    }
}
