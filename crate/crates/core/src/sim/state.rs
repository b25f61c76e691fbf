use num_complex::Complex64;
use serde::Serialize;

use super::config::{InitialData, SimConfig};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::rng::{random_trig_polynomial, rng_for};

#[derive(Clone, Debug)]
pub struct FluidState {
    pub rho: SpectralField,
    pub v: SpectralField,
    pub t: f64,
}

/// Minimal description of the state where an integration stopped.
#[derive(Clone, Debug, Serialize)]
pub struct StateDump {
    pub t: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub max_v: f64,
    pub mean_rho: f64,
}

impl FluidState {
    /// (ρ, v) = (1, 0).
    pub fn ground(grid: TorusGrid) -> Self {
        Self { rho: SpectralField::constant(grid, 1.0), v: SpectralField::zeros(grid, grid.dim()), t: 0.0 }
    }

    pub fn new(rho: SpectralField, v: SpectralField) -> Result<Self> {
        let g = rho.grid();
        if rho.comps() != 1 || v.comps() != g.dim() {
            return Err(Error::Shape { expected: g.dim(), got: v.comps() });
        }
        if v.grid() != g {
            return Err(Error::GridMismatch);
        }
        Ok(Self { rho, v, t: 0.0 })
    }

    pub fn grid(&self) -> TorusGrid {
        self.rho.grid()
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.to_values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.to_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dump(&self) -> StateDump {
        StateDump {
            t: self.t,
            min_rho: self.min_rho(),
            max_rho: self.max_rho(),
            max_v: self.v.max_abs_on_grid(),
            mean_rho: self.rho.mean_scalar(),
        }
    }
}

fn keep_parity(f: &SpectralField, even: bool) -> SpectralField {
    let mut out = f.clone();
    for c in out.coeffs_mut() {
        *c = if even { Complex64::new(c.re, 0.0) } else { Complex64::new(0.0, c.im) };
    }
    out
}

/// Initial state from the configuration, with perturbation size ε measured
/// by the budget ‖ρ₀ − 1‖_{B^{d/p}} + ‖v₀‖_{B^{d/p−1}} for random data and
/// by the amplitude for the cosine profile.
pub fn initial_state(cfg: &SimConfig) -> Result<FluidState> {
    let g = cfg.grid();
    let d = g.dim();
    match cfg.initial {
        InitialData::Cosine => {
            let eps = cfg.epsilon;
            FluidState::new(SpectralField::scalar_from_fn(g, |x| 1.0 + eps * x[0].cos()), SpectralField::zeros(g, d))
        }
        InitialData::Random { band } => {
            if band < 1 || 3 * band as usize > g.n() {
                return Err(Error::Config(format!("band {band} must lie in [1, n/3]")));
            }
            let a = keep_parity(&random_trig_polynomial(g, 1, band, 1.0, true, &mut rng_for(cfg.seed, 100)), true);
            let v = keep_parity(&random_trig_polynomial(g, d, band, 1.0, true, &mut rng_for(cfg.seed, 101)), false);
            let size = crate::diagnostics::initial_budget(&a, &v, cfg.p)?;
            let s = if size > 0.0 { cfg.epsilon / size } else { 0.0 };
            FluidState::new(a.scale(s).add_constant(1.0), v.scale(s))
        }
    }
}
