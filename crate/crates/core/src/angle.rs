//! Circular arithmetic helpers.

use std::f64::consts::{PI, TAU};

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_positive(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Reduces an angle to `(-π, π]`.
pub fn wrap_signed(angle: f64) -> f64 {
    let r = wrap_positive(angle);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest arc length between two angles, in `[0, π]`.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    wrap_signed(a - b).abs()
}

/// Circular mean direction of a sample, `None` when the resultant vanishes.
pub fn circular_mean(angles: &[f64]) -> Option<f64> {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    if s.hypot(c) <= 1e-12 * angles.len() as f64 {
        None
    } else {
        Some(wrap_positive(s.atan2(c)))
    }
}

/// Circular median: the sample point minimizing the mean arc distance to
/// all other points. Ties go to the earliest point in the slice.
pub fn circular_median(angles: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &candidate in angles {
        let cost: f64 = angles.iter().map(|&a| arc_distance(a, candidate)).sum();
        match best {
            Some((_, c)) if cost >= c => {}
            _ => best = Some((candidate, cost)),
        }
    }
    best.map(|(a, _)| wrap_positive(a))
}

/// Linear median of a sample (mean of the two central values for even sizes).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
