//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use tslab::rng::rng_for;

fn rk4_step<F: Fn(f64, &[f64]) -> Vec<f64>>(f: &F, t: f64, y: &[f64], h: f64) -> Vec<f64> {
    let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let k1 = f(t, y);
    let k2 = f(t + h / 2.0, &add(y, &k1, h / 2.0));
    let k3 = f(t + h / 2.0, &add(y, &k2, h / 2.0));
    let k4 = f(t + h, &add(y, &k3, h));
    (0..y.len()).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// Classical RK4 with step-doubling error control and Richardson
/// extrapolation. Returns the state at each requested output time.
pub fn rk4_adaptive<F: Fn(f64, &[f64]) -> Vec<f64>>(f: F, y0: &[f64], t0: f64, outputs: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h: f64 = 1e-3;
    let mut out = Vec::with_capacity(outputs.len());
    for &target in outputs {
        while target - t > 1e-15 * target.abs().max(1.0) {
            let step = h.min(target - t);
            let full = rk4_step(&f, t, &y, step);
            let half = rk4_step(&f, t, &y, step / 2.0);
            let two = rk4_step(&f, t + step / 2.0, &half, step / 2.0);
            let scale = 1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let err = two.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0;
            if err <= tol * scale {
                y = two.iter().zip(&full).map(|(a, b)| a + (a - b) / 15.0).collect();
                t += step;
                if err < tol * scale / 50.0 {
                    h = (step * 2.0).min(0.05);
                }
            } else {
                h = step / 2.0;
            }
        }
        out.push(y.clone());
    }
    out
}

/// Solves d'' + b d' + d = rhs(t) (complex) with the RK4 oracle.
pub fn mode_oracle<R: Fn(f64) -> Complex64>(b: f64, d0: Complex64, dt0: Complex64, rhs: R, outputs: &[f64], tol: f64) -> Vec<Complex64> {
    let f = |t: f64, y: &[f64]| {
        let r = rhs(t);
        vec![y[2], y[3], -y[0] - b * y[2] + r.re, -y[1] - b * y[3] + r.im]
    };
    rk4_adaptive(f, &[d0.re, d0.im, dt0.re, dt0.im], 0.0, outputs, tol)
        .into_iter()
        .map(|y| Complex64::new(y[0], y[1]))
        .collect()
}

/// Random smooth complex signal Σ_j c_j cos(ω_j t + θ_j) with ω_j <= omega_max.
#[derive(Clone)]
pub struct SmoothSignal {
    terms: Vec<(Complex64, f64, f64)>,
}

impl SmoothSignal {
    pub fn random(seed: u64, stream: u64, terms: usize, omega_max: f64) -> Self {
        let mut rng = rng_for(seed, stream);
        let terms = (0..terms)
            .map(|_| {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (c / terms as f64, rng.random_range(0.0..omega_max), rng.random_range(0.0..6.3))
            })
            .collect();
        Self { terms }
    }

    pub fn at(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|(c, w, th)| c * (w * t + th).cos()).sum()
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|(c, w, th)| -c * w * (w * t + th).sin()).sum()
    }
}

pub fn uniform_times(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect()
}

/// Central finite difference of order 6 on a periodic sample line.
pub fn fd6(values: &[f64], h: f64, i: usize) -> f64 {
    let n = values.len();
    let at = |o: isize| values[((i as isize + o).rem_euclid(n as isize)) as usize];
    (-at(-3) + 9.0 * at(-2) - 45.0 * at(-1) + 45.0 * at(1) - 9.0 * at(2) + at(3)) / (60.0 * h)
}
