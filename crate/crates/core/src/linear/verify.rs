//! Self-check of the linear solver: mode solutions against a fine RK4
//! integration and the full system against its own equations.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mode::solve_forced_mode;
use super::roots::{Branch, ModeSolution};
use super::system::solve_linear_system;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::rng::{random_trig_polynomial, rng_for};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearVerifyConfig {
    pub nu: f64,
    /// Every representable |k|² up to this value is checked.
    pub k2_max: i64,
    pub t_end: f64,
    /// Steps of the mode solver (forcing is sampled on this grid).
    pub steps: usize,
    /// RK4 reference step.
    pub oracle_dt: f64,
    pub mode_tol: f64,
    pub d: usize,
    pub n: usize,
    pub amplitude: f64,
    pub system_t_end: f64,
    pub system_steps: usize,
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for LinearVerifyConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            k2_max: 64,
            t_end: 20.0,
            steps: 80_000,
            oracle_dt: 5e-4,
            mode_tol: 1e-8,
            d: 3,
            n: 16,
            amplitude: 1e-3,
            system_t_end: 1.0,
            system_steps: 400,
            residual_tol: 1e-7,
            seed: 0,
        }
    }
}

impl LinearVerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || self.k2_max < 1 || !(self.t_end > 0.0) || self.steps < 2 || !(self.oracle_dt > 0.0) {
            return Err(Error::Config("nu, k2_max, t_end, steps and oracle_dt must be positive".into()));
        }
        if self.system_steps < 4 || !(self.system_t_end > 0.0) {
            return Err(Error::Config("system_steps must be >= 4 and system_t_end positive".into()));
        }
        TorusGrid::new(self.d, self.n)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Σ_j c_j cos(ω_j t + θ_j).
#[derive(Clone, Debug)]
pub struct SmoothForcing {
    terms: Vec<(Complex64, f64, f64)>,
}

impl SmoothForcing {
    pub fn random<R: Rng>(terms: usize, omega_max: f64, rng: &mut R) -> Self {
        let terms = (0..terms)
            .map(|_| {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (c / terms as f64, rng.random_range(0.0..omega_max), rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        Self { terms }
    }

    pub fn at(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|(c, w, th)| c * (w * t + th).cos()).sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeCheck {
    pub k2: i64,
    pub branch: Branch,
    pub max_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearVerifyReport {
    pub modes: Vec<ModeCheck>,
    pub max_mode_error: f64,
    /// (t, ‖residual of the a-equation‖₂, ‖residual of the u-equation‖₂).
    pub residuals: Vec<(f64, f64, f64)>,
    pub max_residual: f64,
    pub passed: bool,
}

/// Integers up to `k2_max` that are sums of three squares.
pub fn representable_k2(k2_max: i64) -> Vec<(i64, [i64; 3])> {
    let r = (k2_max as f64).sqrt() as i64 + 1;
    let mut out: Vec<(i64, [i64; 3])> = Vec::new();
    for a in 0..=r {
        for b in 0..=a {
            for c in 0..=b {
                let s = a * a + b * b + c * c;
                if s >= 1 && s <= k2_max && !out.iter().any(|(x, _)| *x == s) {
                    out.push((s, [a, b, c]));
                }
            }
        }
    }
    out.sort();
    out
}

fn rk4_mode(b: f64, y0: (Complex64, Complex64), h: &SmoothForcing, t_end: f64, dt: f64, outputs: &[f64]) -> Vec<Complex64> {
    let f = |t: f64, y: (Complex64, Complex64)| (y.1, -h.at(t) - y.0 - b * y.1);
    let mut out = Vec::with_capacity(outputs.len());
    let mut y = y0;
    let mut t = 0.0;
    let mut next = 0;
    let steps = (t_end / dt).ceil() as usize;
    let step = t_end / steps as f64;
    for i in 0..=steps {
        while next < outputs.len() && (outputs[next] - t).abs() < 0.5 * step {
            out.push(y.0);
            next += 1;
        }
        if i == steps {
            break;
        }
        let k1 = f(t, y);
        let k2 = f(t + step / 2.0, (y.0 + k1.0 * (step / 2.0), y.1 + k1.1 * (step / 2.0)));
        let k3 = f(t + step / 2.0, (y.0 + k2.0 * (step / 2.0), y.1 + k2.1 * (step / 2.0)));
        let k4 = f(t + step, (y.0 + k3.0 * step, y.1 + k3.1 * step));
        y.0 += (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (step / 6.0);
        y.1 += (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (step / 6.0);
        t = (i + 1) as f64 * step;
    }
    out
}

fn uniform(t_end: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| t_end * i as f64 / steps as f64).collect()
}

/// Runs both checks; `jobs` workers share the mode checks.
pub fn linear_verify(cfg: &LinearVerifyConfig, jobs: usize) -> Result<LinearVerifyReport> {
    cfg.validate()?;
    let reps = representable_k2(cfg.k2_max);
    let times = uniform(cfg.t_end, cfg.steps);
    let out_every = (cfg.steps / 200).max(1);
    let checks = crate::par::par_map(reps.len(), jobs, |i| -> Result<ModeCheck> {
        let (k2, k) = reps[i];
        let mut rng = rng_for(cfg.seed, 1000 + k2 as u64);
        let h = SmoothForcing::random(4, 1.5, &mut rng);
        let d0 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let dt0 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let ms = ModeSolution::new(&k, cfg.nu)?.with_data(dt0, d0);
        let hs: Vec<Complex64> = times.iter().map(|&t| h.at(t)).collect();
        let tr = solve_forced_mode(&ms, &hs, &times)?;
        let idx: Vec<usize> = (0..times.len()).step_by(out_every).collect();
        let outs: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
        let oracle = rk4_mode(cfg.nu * k2 as f64, (ms.d0, ms.dt0), &h, cfg.t_end, cfg.oracle_dt, &outs);
        let max_error = idx.iter().zip(&oracle).map(|(&i, o)| (tr.d[i] - o).norm()).fold(0.0, f64::max);
        Ok(ModeCheck { k2, branch: ms.branch, max_error })
    });
    let modes = checks.into_iter().collect::<Result<Vec<_>>>()?;
    let max_mode_error = modes.iter().map(|m| m.max_error).fold(0.0, f64::max);

    let g = TorusGrid::new(cfg.d, cfg.n)?;
    let d = g.dim();
    let st = uniform(cfg.system_t_end, cfg.system_steps);
    let amp = cfg.amplitude;
    let a0 = random_trig_polynomial(g, 1, 2, 1.0, false, &mut rng_for(cfg.seed, 0)).scale(amp);
    let u0 = random_trig_polynomial(g, d, 2, 1.0, false, &mut rng_for(cfg.seed, 1)).scale(amp);
    let hs = random_trig_polynomial(g, 1, 1, 1.0, false, &mut rng_for(cfg.seed, 2)).scale(amp);
    let gs = random_trig_polynomial(g, d, 1, 1.0, false, &mut rng_for(cfg.seed, 3)).scale(amp);
    let sh = SmoothForcing::random(3, 1.0, &mut rng_for(cfg.seed, 4));
    let sg = SmoothForcing::random(3, 1.0, &mut rng_for(cfg.seed, 5));
    let h: Vec<SpectralField> = st.iter().map(|&t| hs.scale(sh.at(t).re)).collect();
    let gf: Vec<SpectralField> = st.iter().map(|&t| gs.scale(sg.at(t).re)).collect();
    let sol = solve_linear_system(&a0, &u0, Some(&h), Some(&gf), cfg.nu, &st)?;
    let residuals: Vec<(f64, f64, f64)> =
        sol.residuals(Some(&h), Some(&gf))?.into_iter().zip(&st).map(|((a, u), &t)| (t, a, u)).collect();
    let max_residual = residuals.iter().map(|r| r.1.max(r.2)).fold(0.0, f64::max);
    let passed = max_mode_error < cfg.mode_tol && max_residual < cfg.residual_tol;
    Ok(LinearVerifyReport { modes, max_mode_error, residuals, max_residual, passed })
}
