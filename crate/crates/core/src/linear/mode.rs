use super::roots::ModeSolution;
use crate::error::{Error, Result};
use crate::linalg;
use num_complex::Complex64;

/// Checks that `times` is uniform and increasing; returns the step.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::TimeGrid("need at least two sample times".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::TimeGrid("sample times must increase".into()));
    }
    for (i, t) in times.iter().enumerate() {
        if (t - (times[0] + i as f64 * dt)).abs() > 1e-9 * dt.max(t.abs()) {
            return Err(Error::TimeGrid(format!("sample times are not uniform near index {i}")));
        }
    }
    Ok(dt)
}

/// Closed-form homogeneous trajectory with d(t₀) = d0, d'(t₀) = a0.
pub fn solve_homogeneous_mode(ms: &ModeSolution, a0: Complex64, d0: Complex64, times: &[f64]) -> Vec<Complex64> {
    let ms = ms.clone().with_data(a0, d0);
    let t0 = times.first().copied().unwrap_or(0.0);
    times.iter().map(|&t| ms.state_at(t - t0).0).collect()
}

/// Exact one-step propagator for y' = My + e₂f(t) with f linear on the step:
/// y(t+Δ) = P₀ y(t) + P₁ f(t) + P₂ (f(t+Δ) − f(t))/Δ.
#[derive(Debug, Clone, Copy)]
pub struct StepPropagator {
    p: [[f64; 4]; 2],
}

impl StepPropagator {
    /// M = [[0, 1], [−1, −b]] with b = ν|k|².
    pub fn new(b: f64, dt: f64) -> Self {
        // augmented state (d, d', w, w'), f = w, w'' = 0
        #[rustfmt::skip]
        let m = [
            0.0, 1.0, 0.0, 0.0,
            -1.0, -b, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 0.0, 0.0,
        ];
        let scaled: Vec<f64> = m.iter().map(|x| x * dt).collect();
        let e = linalg::expm(&scaled, 4);
        let mut p = [[0.0; 4]; 2];
        for i in 0..2 {
            for j in 0..4 {
                p[i][j] = e[i * 4 + j];
            }
        }
        Self { p }
    }

    pub fn apply(&self, y: (Complex64, Complex64), f0: Complex64, slope: Complex64) -> (Complex64, Complex64) {
        let v = [y.0, y.1, f0, slope];
        let row = |i: usize| (0..4).map(|j| v[j] * self.p[i][j]).sum::<Complex64>();
        (row(0), row(1))
    }
}

/// (d, d') sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrajectory {
    pub d: Vec<Complex64>,
    pub dt: Vec<Complex64>,
}

/// Solves d'' + ν|k|²d' + d = −h_k from the data stored in `ms`,
/// with h_k linear between samples. Exact for such h_k.
pub fn solve_forced_mode(ms: &ModeSolution, h: &[Complex64], times: &[f64]) -> Result<ModeTrajectory> {
    if h.len() != times.len() {
        return Err(Error::TimeGrid(format!("{} forcing samples for {} times", h.len(), times.len())));
    }
    let step = uniform_step(times)?;
    let prop = StepPropagator::new(ms.nu * ms.k2, step);
    let mut y = (ms.d0, ms.dt0);
    let mut d = Vec::with_capacity(times.len());
    let mut dt = Vec::with_capacity(times.len());
    d.push(y.0);
    dt.push(y.1);
    for n in 0..times.len() - 1 {
        let f0 = -h[n];
        let slope = (-h[n + 1] - f0) / step;
        y = prop.apply(y, f0, slope);
        d.push(y.0);
        dt.push(y.1);
    }
    Ok(ModeTrajectory { d, dt })
}
