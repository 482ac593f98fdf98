use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::stats::p_values;
use super::{DataPoint, FitResult, ModelId};
use crate::error::{Error, Result};

/// One inverse-power term of the asymptotic models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PowerTerm {
    /// `A1 / α²`
    A1,
    /// `A2 / α³`
    A2,
    /// `A3 / α⁴`
    A3,
}

impl PowerTerm {
    fn exponent(self) -> i32 {
        match self {
            Self::A1 => 2,
            Self::A2 => 3,
            Self::A3 => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::A1 => "A1",
            Self::A2 => "A2",
            Self::A3 => "A3",
        }
    }
}

impl ModelId {
    /// Terms of a power model; `None` for the exponential models.
    pub fn power_terms(self) -> Option<&'static [PowerTerm]> {
        match self {
            Self::Y1 => Some(&[PowerTerm::A1, PowerTerm::A2, PowerTerm::A3]),
            Self::Y2 => Some(&[PowerTerm::A1, PowerTerm::A2]),
            Self::Y3 => Some(&[PowerTerm::A1, PowerTerm::A3]),
            _ => None,
        }
    }

    fn from_terms(terms: &[PowerTerm]) -> Option<Self> {
        [Self::Y1, Self::Y2, Self::Y3]
            .into_iter()
            .find(|m| m.power_terms() == Some(terms))
    }
}

/// Only points above this mean photon number enter the asymptote fits.
pub const MIN_ALPHA_SQ: f64 = 5.0;

/// Weighted linear least squares of a power model in `α`; `x` is `α²`.
///
/// Solved through the SVD of the weighted design matrix. p-values are
/// two-sided t tests with `n − k` degrees of freedom.
pub fn fit_power_models(points: &[DataPoint], model_id: ModelId) -> Result<FitResult> {
    let terms = model_id
        .power_terms()
        .ok_or_else(|| Error::InsufficientData(format!("{model_id} is not a power model")))?;
    fit_terms(points, terms, model_id)
}

fn fit_terms(points: &[DataPoint], terms: &[PowerTerm], model_id: ModelId) -> Result<FitResult> {
    let used: Vec<&DataPoint> = points.iter().filter(|p| p.x > MIN_ALPHA_SQ).collect();
    let k = terms.len();
    if used.len() < k + 2 {
        return Err(Error::InsufficientData(format!(
            "{model_id} needs >= {} points with alpha_sq > {MIN_ALPHA_SQ}, got {}",
            k + 2,
            used.len()
        )));
    }
    if used
        .iter()
        .any(|p| !(p.sigma > 0.0 && p.sigma.is_finite() && p.y.is_finite()))
    {
        return Err(Error::InsufficientData(
            "points need finite values and sigma > 0".into(),
        ));
    }
    let n = used.len();
    let design = DMatrix::from_fn(n, k, |i, j| {
        used[i].x.powf(-0.5 * terms[j].exponent() as f64) / used[i].sigma
    });
    let target = DVector::from_fn(n, |i, _| used[i].y / used[i].sigma);
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    if svd.singular_values.iter().any(|s| *s <= 1e-13 * max_sv) {
        return Err(Error::SingularFit("power"));
    }
    let u = svd.u.as_ref().expect("computed");
    let v_t = svd.v_t.as_ref().expect("computed");
    let inv_s = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / s));
    let coefficients = v_t.transpose() * &inv_s * u.transpose() * &target;
    let residual = &target - &design * &coefficients;
    let dof = n - k;
    let rse = (residual.norm_squared() / dof as f64).sqrt();
    let cov = v_t.transpose() * &inv_s * &inv_s * v_t * (rse * rse);
    let coefficients: Vec<f64> = coefficients.iter().copied().collect();
    let standard_errors: Vec<f64> = (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    Ok(FitResult {
        model_id,
        names: terms.iter().map(|t| t.name().to_string()).collect(),
        p_values: p_values(&coefficients, &standard_errors, dof),
        coefficients,
        standard_errors,
        residual_standard_error: rse,
        covariance: (0..k).map(|i| (0..k).map(|j| cov[(i, j)]).collect()).collect(),
        degrees_of_freedom: dof,
        iterations: 1,
    })
}

/// Significance below which a term is kept outright.
pub const KEEP_P: f64 = 0.001;
/// Significance above which a term is dropped.
pub const DROP_P: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub model_id: ModelId,
    pub fit: FitResult,
    /// Every fit visited, starting from the full model.
    pub history: Vec<FitResult>,
}

/// Backward elimination from the full three-term model.
///
/// Repeatedly drops the term with the largest p-value while it exceeds
/// 0.1, then accepts the model once every surviving term has p < 0.001.
/// Anything in between, or an elimination leaving no named model, is
/// reported as [`Error::Inconclusive`].
pub fn backward_eliminate(points: &[DataPoint]) -> Result<Selection> {
    let mut terms = ModelId::Y1.power_terms().expect("power model").to_vec();
    let mut history = Vec::new();
    loop {
        let model_id = ModelId::from_terms(&terms).expect("named model");
        let fit = fit_terms(points, &terms, model_id)?;
        history.push(fit.clone());
        let (worst, worst_p) = fit
            .p_values
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty model");
        if worst_p < KEEP_P {
            return Ok(Selection { model_id, fit, history });
        }
        if worst_p <= DROP_P {
            return Err(Error::Inconclusive(format!(
                "{model_id}: {} has p = {worst_p:.3e}, between {KEEP_P} and {DROP_P}",
                fit.names[worst]
            )));
        }
        let mut reduced = terms.clone();
        reduced.remove(worst);
        if ModelId::from_terms(&reduced).is_none() {
            return Err(Error::Inconclusive(format!(
                "{model_id}: dropping {} (p = {worst_p:.3e}) leaves no candidate model",
                fit.names[worst]
            )));
        }
        terms = reduced;
    }
}
