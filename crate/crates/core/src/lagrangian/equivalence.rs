//! Eulerian runs with a co-advanced flow map, compared against Lagrangian
//! trajectories.

use serde::Serialize;

use super::deform::{advance_map_eulerian, deformation_matrix, DeformationState};
use super::map::min_jacobian;
use super::operators::gradient_u;
use super::transport::pullback;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::rng::{random_trig_polynomial, rng_for};
use crate::sim::{step_conservative, Conservative, FluidState, SimConfig};

/// Eulerian samples with the flow map X(t) at the same times.
#[derive(Clone, Debug)]
pub struct CoAdvanced {
    pub times: Vec<f64>,
    pub states: Vec<FluidState>,
    pub maps: Vec<DeformationState>,
}

/// Fixed-step Eulerian run of `cfg` from `initial`, sampled every
/// `cfg.sample_every` steps. Between samples X follows dX/dt = v(t, X) by
/// Heun's method using the sampled velocities.
pub fn co_advance(initial: &FluidState, cfg: &SimConfig) -> Result<CoAdvanced> {
    cfg.validate()?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    if steps == 0 || steps % cfg.sample_every != 0 {
        return Err(Error::Config(format!("t_end/dt = {steps} must be a positive multiple of sample_every")));
    }
    let dt = cfg.t_end / steps as f64;
    let mut cons = Conservative::from_state(initial)?;
    let mut out = CoAdvanced {
        times: vec![initial.t],
        states: vec![initial.clone()],
        maps: vec![DeformationState::identity(initial.grid())],
    };
    for i in 1..=steps {
        cons = step_conservative(&cons, dt, cfg.sign, cfg.rho_min)?;
        if i % cfg.sample_every == 0 {
            let s = cons.to_state(cfg.rho_min)?;
            let prev = out.states.last().expect("initial sample");
            let map = advance_map_eulerian(out.maps.last().expect("initial map"), &prev.v, &s.v, s.t - prev.t)?;
            out.times.push(s.t);
            out.states.push(s);
            out.maps.push(map);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceRecord {
    pub t: f64,
    /// max_y |ρ(t, X(t,y)) − 1 − a(t,y)|.
    pub max_density_mismatch: f64,
    /// max_y |v(t, X(t,y)) − u(t,y)|.
    pub max_velocity_mismatch: f64,
    pub gamma: f64,
    pub min_jacobian: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Worst {
    pub t: f64,
    pub y: Vec<f64>,
    pub mismatch: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub tolerance: f64,
    pub records: Vec<EquivalenceRecord>,
    pub worst: Worst,
    /// ‖Aᵀ∇(w∘X) − (∇w)∘X‖_∞ at the final map for a sampled w.
    pub chain_rule_error: f64,
    /// Series minus direct inverse of ∇X at the final map, when gamma < 1/4.
    pub neumann_direct_error: Option<f64>,
    pub passed: bool,
}

fn max_with_location(diff: &SpectralField) -> (usize, f64) {
    let len = diff.grid().len();
    let vals = diff.to_values();
    let mut best = (0, 0.0);
    for (i, x) in vals.iter().enumerate() {
        if x.abs() > best.1 {
            best = (i % len, x.abs());
        }
    }
    best
}

/// Compare a co-advanced Eulerian run with a Lagrangian trajectory (a, u)
/// sampled at the same times.
pub fn equivalence_check(run: &CoAdvanced, a: &[SpectralField], u: &[SpectralField], tolerance: f64) -> Result<EquivalenceReport> {
    if a.len() != run.states.len() || u.len() != run.states.len() {
        return Err(Error::TimeGrid(format!("{} Eulerian samples, {} Lagrangian", run.states.len(), a.len())));
    }
    let g = run.states[0].grid();
    let mut records = Vec::with_capacity(a.len());
    let mut worst = Worst { t: run.times[0], y: g.point(0), mismatch: 0.0 };
    for (n, (s, def)) in run.states.iter().zip(&run.maps).enumerate() {
        let dr = pullback(&s.rho, def)?.add_constant(-1.0).sub(&a[n])?;
        let dv = pullback(&s.v, def)?.sub(&u[n])?;
        let (ir, er) = max_with_location(&dr);
        let (iv, ev) = max_with_location(&dv);
        for (i, e) in [(ir, er), (iv, ev)] {
            if e > worst.mismatch {
                worst = Worst { t: run.times[n], y: g.point(i), mismatch: e };
            }
        }
        records.push(EquivalenceRecord {
            t: run.times[n],
            max_density_mismatch: er,
            max_velocity_mismatch: ev,
            gamma: def.gamma,
            min_jacobian: min_jacobian(&def.disp)?,
        });
    }
    let last = run.maps.last().expect("nonempty run");
    let w = random_trig_polynomial(g, 1, 2, 0.0, false, &mut rng_for(0, 77));
    let chain_rule_error = gradient_u(&pullback(&w, last)?, &last.a)?.sub(&pullback(&w.gradient()?, last)?)?.max_abs_on_grid();
    let neumann_direct_error = if last.gamma < 0.25 {
        let direct = deformation_matrix(&DeformationState { gamma: 1.0, ..last.clone() })?;
        Some(direct.a.sub(&last.a)?.max_abs_on_grid())
    } else {
        None
    };
    let passed = worst.mismatch < tolerance && chain_rule_error < tolerance;
    Ok(EquivalenceReport { tolerance, records, worst, chain_rule_error, neumann_direct_error, passed })
}
