//! φ-functions of exponential integrators, evaluated without cancellation.
//!
//! φ₁(z) = (e^z − 1)/z and φ₂(z) = (e^z − 1 − z)/z², with φ_j(0) = 1/j!.

use num_complex::Complex64;

const SERIES_RADIUS: f64 = 0.5;

fn series(z: Complex64, j: u32) -> Complex64 {
    // Σ_{m>=0} z^m / (m + j)!
    let mut term = Complex64::new(1.0, 0.0);
    for i in 1..=j {
        term /= i as f64;
    }
    let mut sum = term;
    for m in 1..30 {
        term = term * z / (m + j) as f64;
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}

pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        series(z, 1)
    } else {
        (z.exp() - 1.0) / z
    }
}

pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        series(z, 2)
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

pub fn phi1_real(x: f64) -> f64 {
    phi1(Complex64::new(x, 0.0)).re
}

pub fn phi2_real(x: f64) -> f64 {
    phi2(Complex64::new(x, 0.0)).re
}

/// Divided difference (e^{at} − e^{bt})/(a − b), finite as a → b.
pub fn exp_divided_difference(a: Complex64, b: Complex64, t: f64) -> Complex64 {
    // e^{bt} · t · φ₁((a − b)t)
    (b * t).exp() * t * phi1((a - b) * t)
}
