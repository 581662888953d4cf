//! Small numeric helpers shared by the verification modules: central
//! difference stencils, angle unwrapping, modular distances and SVD rank.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Absolute floor used in every relative-residual denominator.
pub const SCALE_FLOOR: f64 = 1e-300;

/// Fourth-order central first derivative at sample `i`.
pub fn central_d1(f: &[f64], i: usize, h: f64) -> Option<f64> {
    if i < 2 || i + 2 >= f.len() {
        return None;
    }
    Some((f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h))
}

/// Fourth-order central second derivative at sample `i`.
pub fn central_d2(f: &[f64], i: usize, h: f64) -> Option<f64> {
    if i < 2 || i + 2 >= f.len() {
        return None;
    }
    Some((-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h))
}

/// First and second derivative of a scalar function at `x` from the
/// five-point stencil `x + k h`, k = -2..=2.
pub fn stencil_d1_d2(values: [f64; 5], h: f64) -> (f64, f64) {
    let [m2, m1, c, p1, p2] = values;
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

/// Removes 2π jumps from a sequence of angles.
pub fn unwrap_angles(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &a in angles {
        if let Some(p) = prev {
            let d = a - p;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        prev = Some(a);
        out.push(a + offset);
    }
    out
}

/// Representative of `x` modulo `period` in [-period/2, period/2).
pub fn wrap_symmetric(x: f64, period: f64) -> f64 {
    x - period * (x / period + 0.5).floor()
}

/// Distance between `a` and `b` modulo `period`.
pub fn mod_distance(a: f64, b: f64, period: f64) -> f64 {
    wrap_symmetric(a - b, period).abs()
}

/// Shift that brings an angle into the principal arctangent branch (-π/2, π/2].
pub fn principal_shift(angle: f64) -> f64 {
    let k = (angle / PI).round();
    let mut shift = -k * PI;
    if angle + shift <= -PI / 2.0 {
        shift += PI;
    }
    shift
}

/// Singular values in decreasing order and the count above `rel_tol` times the largest.
pub fn numerical_rank(matrix: &DMatrix<f64>, rel_tol: f64) -> (usize, Vec<f64>) {
    let mut sv: Vec<f64> = matrix.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let largest = sv.first().copied().unwrap_or(0.0);
    if largest <= 0.0 {
        return (0, sv);
    }
    let rank = sv.iter().filter(|&&s| s > rel_tol * largest).count();
    (rank, sv)
}

/// Fixed 17-significant-digit float formatting used in every CSV export.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
