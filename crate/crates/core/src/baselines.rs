//! Closed-form benchmark variances for coherent-state phase estimation.
//!
//! All functions take the field amplitude `α` (mean photon number `α²`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ln_factorial;

/// Holevo variance of the adaptive Mark-II homodyne scheme at `α² = 1`.
pub const MKII_AT_MPN1: f64 = 0.767;

/// 1σ uncertainties of the fitted large-`α` photon-counting asymptote.
pub const NONGAUSSIAN_A1: (f64, f64) = (0.250, 0.001);
pub const NONGAUSSIAN_A3: (f64, f64) = (0.520, 0.010);

fn positive(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(alpha)
    } else {
        Err(Error::NonPositiveAlpha(alpha))
    }
}

/// Quantum Cramér–Rao bound `1/(4α²)`.
pub fn qcrb(alpha: f64) -> Result<f64> {
    let a = positive(alpha)?;
    Ok(0.25 / (a * a))
}

/// Heterodyne limit `1/(2α²)`.
pub fn heterodyne_variance(alpha: f64) -> Result<f64> {
    let a = positive(alpha)?;
    Ok(0.5 / (a * a))
}

/// Large-`α` Mark-II asymptote `1/(4α²) + 1/(8α³)`.
pub fn mkii_asymptotic(alpha: f64) -> Result<f64> {
    let a = positive(alpha)?;
    Ok(0.25 / (a * a) + 0.125 / (a * a * a))
}

/// Exact Holevo variance of the canonical phase measurement, `1/S² − 1` with
/// `S = e^{−α²} Σ_n α^{2n+1} / (n! √(n+1))`.
///
/// Terms are summed in log space until they drop below `1e-15 · S` and `n`
/// has passed `α² + 10√(α² + 1)`. Returns infinity for the vacuum.
pub fn cpm_exact(alpha: f64) -> f64 {
    if !(alpha > 0.0) {
        return f64::INFINITY;
    }
    let mean = alpha * alpha;
    let ln_alpha = alpha.ln();
    let min_terms = mean + 10.0 * (mean + 1.0).sqrt();
    let mut sharpness = 0.0;
    let mut n = 0usize;
    loop {
        let ln_term = -mean + (2 * n + 1) as f64 * ln_alpha - ln_factorial(n) - 0.5 * ((n + 1) as f64).ln();
        let term = ln_term.exp();
        sharpness += term;
        if n as f64 >= min_terms && term < 1e-15 * sharpness {
            break;
        }
        n += 1;
    }
    1.0 / (sharpness * sharpness) - 1.0
}

/// Canonical-measurement asymptote `1/(4α²) + 5/(32α⁴)`.
pub fn cpm_asymptotic(alpha: f64) -> Result<f64> {
    let a2 = positive(alpha)?.powi(2);
    Ok(0.25 / a2 + 5.0 / (32.0 * a2 * a2))
}

/// Photon-counting asymptote `0.250/α² + 0.520/α⁴`.
pub fn nongaussian_asymptotic(alpha: f64) -> Result<f64> {
    let a2 = positive(alpha)?.powi(2);
    Ok(NONGAUSSIAN_A1.0 / a2 + NONGAUSSIAN_A3.0 / (a2 * a2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub alpha_sq: f64,
    pub qcrb: f64,
    pub heterodyne: f64,
    pub mkii_asymptotic: f64,
    pub cpm_exact: f64,
    pub cpm_asymptotic: f64,
    pub nongaussian_asymptotic: f64,
}

impl BaselineRow {
    pub fn new(alpha_sq: f64) -> Result<Self> {
        let alpha = positive(alpha_sq)?.sqrt();
        Ok(Self {
            alpha_sq,
            qcrb: qcrb(alpha)?,
            heterodyne: heterodyne_variance(alpha)?,
            mkii_asymptotic: mkii_asymptotic(alpha)?,
            cpm_exact: cpm_exact(alpha),
            cpm_asymptotic: cpm_asymptotic(alpha)?,
            nongaussian_asymptotic: nongaussian_asymptotic(alpha)?,
        })
    }

    /// `(heterodyne, mkii, nongaussian)` minus the exact canonical variance.
    pub fn excess_over_cpm(&self) -> (f64, f64, f64) {
        (
            self.heterodyne - self.cpm_exact,
            self.mkii_asymptotic - self.cpm_exact,
            self.nongaussian_asymptotic - self.cpm_exact,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTable {
    pub rows: Vec<BaselineRow>,
}

impl BaselineTable {
    pub fn new(alpha_sq: &[f64]) -> Result<Self> {
        Ok(Self {
            rows: alpha_sq.iter().map(|a| BaselineRow::new(*a)).collect::<Result<_>>()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((qcrb(1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((qcrb(2.0).unwrap() - 0.0625).abs() < 1e-15);
        assert!((qcrb(10f64.sqrt()).unwrap() - 0.025).abs() < 1e-15);
        assert!((heterodyne_variance(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((heterodyne_variance(2f64.sqrt()).unwrap() - 0.25).abs() < 1e-15);
        for a in [0.3, 1.0, 7.0] {
            assert!((heterodyne_variance(a).unwrap() / qcrb(a).unwrap() - 2.0).abs() < 1e-12);
        }
        assert!((mkii_asymptotic(2.0).unwrap() - 0.078125).abs() < 1e-15);
        assert!((mkii_asymptotic(1e4).unwrap() / qcrb(1e4).unwrap() - 1.0).abs() < 1e-3);
        assert!((cpm_asymptotic(1.0).unwrap() - 0.40625).abs() < 1e-15);
        assert!((cpm_asymptotic(10f64.sqrt()).unwrap() - 0.0265625).abs() < 1e-15);
        assert!((nongaussian_asymptotic(10f64.sqrt()).unwrap() - 0.0302).abs() < 1e-12);
        assert!((nongaussian_asymptotic(10.0).unwrap() - 0.002552).abs() < 1e-12);
        for a in [1.0f64, 3.0] {
            let excess = nongaussian_asymptotic(a).unwrap() - cpm_asymptotic(a).unwrap();
            assert!((excess - 0.36375 / a.powi(4)).abs() < 1e-12);
            let excess = cpm_asymptotic(a).unwrap() - qcrb(a).unwrap();
            assert!((excess - 5.0 / (32.0 * a.powi(4))).abs() < 1e-15);
        }
        assert_eq!(qcrb(0.0), Err(Error::NonPositiveAlpha(0.0)));
        assert!(heterodyne_variance(-1.0).is_err());
    }

    #[test]
    fn canonical_measurement() {
        assert!((cpm_exact(1.0) - 0.673).abs() < 1e-3);
        assert_eq!(cpm_exact(0.0), f64::INFINITY);
        let a = 20f64.sqrt();
        let rel = (cpm_exact(a) - cpm_asymptotic(a).unwrap()).abs() / cpm_exact(a);
        assert!(rel < 0.01);
    }
}
