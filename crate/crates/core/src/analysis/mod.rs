//! Convergence and asymptote fits over ensemble results.
//!
//! - [`fit_exponential`]: `y = A e^{−B L} + C` by damped Gauss–Newton
//! - [`fit_power_models`]: inverse-power models in `α` by linear least squares
//! - [`backward_eliminate`]: p-value driven selection among the power models
//! - [`extrapolate_coefficients`]: `A_i(L) = D e^{−E L} + F`

mod exponential;
mod power;
mod stats;

pub use exponential::{extrapolate_coefficients, fit_exponential};
pub use power::{backward_eliminate, fit_power_models, PowerTerm, Selection, DROP_P, KEEP_P, MIN_ALPHA_SQ};
pub use stats::two_sided_t_p_value;

use serde::{Deserialize, Serialize};

/// One observation with its 1σ uncertainty; `x` is `L` or `α²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

impl DataPoint {
    pub fn new(x: f64, y: f64, sigma: f64) -> Self {
        Self { x, y, sigma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Exponential,
    Y1,
    Y2,
    Y3,
    CoefficientTrend,
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exponential => "exponential",
            Self::Y1 => "y1",
            Self::Y2 => "y2",
            Self::Y3 => "y3",
            Self::CoefficientTrend => "coefficient_trend",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: ModelId,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    pub residual_standard_error: f64,
    pub covariance: Vec<Vec<f64>>,
    pub degrees_of_freedom: usize,
    pub iterations: usize,
}

impl FitResult {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn standard_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.standard_errors[i])
    }

    pub fn p_value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.p_values[i])
    }
}
