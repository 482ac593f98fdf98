use nalgebra::{Matrix3, Vector3};

use super::stats::p_values;
use super::{DataPoint, FitResult, ModelId};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const PARAMETER_TOLERANCE: f64 = 1e-10;

fn model(p: &Vector3<f64>, x: f64) -> f64 {
    p[0] * (-p[1] * x).exp() + p[2]
}

/// Analytic gradient of the model with respect to `(A, B, C)`.
pub(crate) fn gradient(p: &Vector3<f64>, x: f64) -> Vector3<f64> {
    let e = (-p[1] * x).exp();
    Vector3::new(e, -p[0] * x * e, 1.0)
}

fn weighted_cost(points: &[DataPoint], p: &Vector3<f64>) -> f64 {
    points
        .iter()
        .map(|pt| ((pt.y - model(p, pt.x)) / pt.sigma).powi(2))
        .sum()
}

fn normal_equations(points: &[DataPoint], p: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>) {
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for pt in points {
        let w = pt.sigma.powi(-2);
        let g = gradient(p, pt.x);
        let r = pt.y - model(p, pt.x);
        normal += w * g * g.transpose();
        rhs += w * r * g;
    }
    (normal, rhs)
}

fn initial_guess(points: &[DataPoint]) -> Vector3<f64> {
    let c0 = points.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let a0 = points.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) - c0;
    // weighted log-linear regression of ln(y − C0) against x
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for pt in points.iter().filter(|p| p.y - c0 > 0.0) {
        let ly = (pt.y - c0).ln();
        let w = ((pt.y - c0) / pt.sigma).powi(2);
        sw += w;
        sx += w * pt.x;
        sy += w * ly;
        sxx += w * pt.x * pt.x;
        sxy += w * pt.x * ly;
    }
    let det = sw * sxx - sx * sx;
    let mean_x = points.iter().map(|p| p.x).sum::<f64>() / points.len() as f64;
    let b0 = if sw > 0.0 && det.abs() > 1e-300 {
        -(sw * sxy - sx * sy) / det
    } else {
        1.0 / mean_x.abs().max(1e-12)
    };
    Vector3::new(a0, if b0.is_finite() { b0 } else { 1.0 / mean_x }, c0)
}

fn validate(points: &[DataPoint]) -> Result<()> {
    if points.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "exponential fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|p| !(p.sigma > 0.0 && p.sigma.is_finite() && p.x.is_finite() && p.y.is_finite()))
    {
        return Err(Error::InsufficientData(
            "points need finite values and sigma > 0".into(),
        ));
    }
    Ok(())
}

/// Weighted least-squares fit of `y = A e^{−B x} + C`.
///
/// Levenberg–Marquardt damping on the Gauss–Newton normal equations, with
/// `C0 = min y`, `A0 = max y − C0` and `B0` from a log-linear fit of
/// `y − C0`. Stops when an accepted step changes the parameters by less
/// than 1e-10 relative, or after 200 iterations.
pub fn fit_exponential(points: &[DataPoint]) -> Result<FitResult> {
    fit(points, ModelId::Exponential, ["A", "B", "C"])
}

/// Fits `A_i(L) = D e^{−E L} + F`; `F` is the `L → ∞` coefficient.
pub fn extrapolate_coefficients(points: &[DataPoint]) -> Result<FitResult> {
    fit(points, ModelId::CoefficientTrend, ["D", "E", "F"])
}

fn fit(points: &[DataPoint], model_id: ModelId, names: [&str; 3]) -> Result<FitResult> {
    validate(points)?;
    let mut p = initial_guess(points);
    let mut cost = weighted_cost(points, &p);
    let mut damping = 1e-3;
    let mut iterations = 0;
    let mut converged = cost == 0.0;
    while !converged {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NoConvergence { iterations });
        }
        iterations += 1;
        let (normal, rhs) = normal_equations(points, &p);
        loop {
            let mut damped = normal;
            for k in 0..3 {
                damped[(k, k)] += damping * normal[(k, k)].max(1e-300);
            }
            let step = damped.lu().solve(&rhs);
            let candidate = step.map(|s| p + s);
            match candidate {
                Some(next) if next.iter().all(|v| v.is_finite()) => {
                    let next_cost = weighted_cost(points, &next);
                    if next_cost <= cost {
                        let change = (next - p).norm() / p.norm().max(1e-300);
                        p = next;
                        converged = change < PARAMETER_TOLERANCE || next_cost == 0.0;
                        cost = next_cost;
                        damping = (damping / 3.0).max(1e-12);
                        break;
                    }
                }
                _ => {}
            }
            damping *= 4.0;
            if damping > 1e16 {
                // no descent direction left: already at the minimum to working precision
                converged = true;
                break;
            }
        }
    }
    finish(points, p, iterations, model_id, names)
}

fn finish(
    points: &[DataPoint],
    p: Vector3<f64>,
    iterations: usize,
    model_id: ModelId,
    names: [&str; 3],
) -> Result<FitResult> {
    let dof = points.len() - 3;
    let rse = (weighted_cost(points, &p) / dof as f64).sqrt();
    let (normal, _) = normal_equations(points, &p);
    let scale = (0..3).map(|k| normal[(k, k)].sqrt()).collect::<Vec<_>>();
    let mut covariance = [[0.0; 3]; 3];

    // A ≈ 0 leaves B unidentified: report it with infinite error
    let flat = scale[1] <= 1e-12 * scale[0].max(scale[2]);
    if flat {
        let sub = nalgebra::Matrix2::new(normal[(0, 0)], normal[(0, 2)], normal[(2, 0)], normal[(2, 2)]);
        let inv = sub.try_inverse().ok_or(Error::SingularFit("exponential"))?;
        let idx = [0, 2];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                covariance[i][j] = rse * rse * inv[(a, b)];
            }
        }
        covariance[1][1] = f64::INFINITY;
    } else {
        // equilibrate before inverting; the columns differ by orders of magnitude
        let d = Matrix3::from_diagonal(&Vector3::new(1.0 / scale[0], 1.0 / scale[1], 1.0 / scale[2]));
        let scaled = d * normal * d;
        let inv = scaled.try_inverse().ok_or(Error::SingularFit("exponential"))?;
        if inv.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularFit("exponential"));
        }
        let inv = d * inv * d;
        for i in 0..3 {
            for j in 0..3 {
                covariance[i][j] = rse * rse * inv[(i, j)];
            }
        }
    }
    let coefficients: Vec<f64> = p.iter().copied().collect();
    let standard_errors: Vec<f64> = (0..3).map(|k| covariance[k][k].max(0.0).sqrt()).collect();
    Ok(FitResult {
        model_id,
        names: names.iter().map(|s| s.to_string()).collect(),
        p_values: p_values(&coefficients, &standard_errors, dof),
        coefficients,
        standard_errors,
        residual_standard_error: rse,
        covariance: covariance.iter().map(|r| r.to_vec()).collect(),
        degrees_of_freedom: dof,
        iterations,
    })
}
