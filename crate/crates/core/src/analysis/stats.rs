use statrs::distribution::{ContinuousCDF, StudentsT};

/// Two-sided p-value of `H0: coefficient = 0` from a t statistic.
pub fn two_sided_t_p_value(estimate: f64, standard_error: f64, dof: usize) -> f64 {
    if standard_error == 0.0 {
        return if estimate == 0.0 { 1.0 } else { 0.0 };
    }
    if !standard_error.is_finite() || dof == 0 {
        return 1.0;
    }
    let t = (estimate / standard_error).abs();
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("dof > 0");
    (2.0 * dist.sf(t)).clamp(0.0, 1.0)
}

pub(crate) fn p_values(coefficients: &[f64], errors: &[f64], dof: usize) -> Vec<f64> {
    coefficients
        .iter()
        .zip(errors)
        .map(|(c, e)| two_sided_t_p_value(*c, *e, dof))
        .collect()
}
