//! Eulerian integration of ρ_t + div(ρv) = 0, ρv_t + ρv·∇v − Δv = ∓ρ∇Kρ.
//!
//! The stepper advances (ρ, m = ρv). The momentum equation is written as
//! m_t − Δm = −div(m⊗v) + Δ(v − m) ∓ ρ∇Kρ, with the exact integrating
//! factor e^{−|k|²dt} on Δm and Heun's method on the rest. Every explicit
//! term has zero mean, so mass and momentum are conserved to roundoff.

use num_complex::Complex64;
use serde::Serialize;

use super::config::{Sign, SimConfig};
use super::state::{FluidState, StateDump};
use crate::diagnostics::{DiagnosticsRecord, Tracker};
use crate::error::{Error, Result};
use crate::fft::{forward_real_pair, inverse_real_pair};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

/// Integrator state in conservative variables.
#[derive(Clone, Debug)]
pub struct Conservative {
    pub rho: SpectralField,
    pub m: SpectralField,
    pub t: f64,
}

impl Conservative {
    pub fn from_state(s: &FluidState) -> Result<Self> {
        Ok(Self { rho: s.rho.clone(), m: s.rho.product(&s.v)?, t: s.t })
    }

    /// max over the grid of |m/ρ|.
    pub fn speed_max(&self) -> f64 {
        let g = self.rho.grid();
        let len = g.len();
        let r = self.rho.to_values();
        let m = self.m.to_values();
        (0..len)
            .map(|i| (0..g.dim()).map(|a| (m[a * len + i] / r[i]).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn to_state(&self, rho_min: f64) -> Result<FluidState> {
        Ok(FluidState { rho: self.rho.clone(), v: velocity(&self.rho, &self.m, rho_min, self.t)?, t: self.t })
    }
}

pub(super) fn positivity(rho: &SpectralField, rho_min: f64, t: f64) -> Result<Vec<f64>> {
    let vals = rho.to_values();
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > rho_min) {
        return Err(Error::Positivity { t, min_rho: min });
    }
    Ok(vals)
}

/// v = m/ρ pointwise, dealiased.
fn velocity(rho: &SpectralField, m: &SpectralField, rho_min: f64, t: f64) -> Result<SpectralField> {
    let r = positivity(rho, rho_min, t)?;
    let len = r.len();
    let mut mv = m.to_values();
    for (i, x) in mv.iter_mut().enumerate() {
        *x /= r[i % len];
    }
    Ok(SpectralField::from_values(rho.grid(), m.comps(), &mv)?.dealiased())
}

fn reciprocal(rho: &SpectralField, rho_min: f64, t: f64) -> Result<SpectralField> {
    let r: Vec<f64> = positivity(rho, rho_min, t)?.iter().map(|x| 1.0 / x).collect();
    SpectralField::from_values(rho.grid(), 1, &r)
}

/// ∇Kρ.
pub fn potential_force(rho: &SpectralField) -> Result<SpectralField> {
    rho.poisson_inverse().gradient()
}

/// (v·∇)w for vector fields v, w.
pub fn advection(v: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    let d = v.grid().dim();
    let jac = w.jacobian()?;
    let mut parts = Vec::with_capacity(w.comps());
    for a in 0..w.comps() {
        let mut acc = SpectralField::zeros(v.grid(), 1);
        for b in 0..d {
            acc.axpy(1.0, &v.component(b).product(&jac.component(a * d + b))?)?;
        }
        parts.push(acc);
    }
    SpectralField::from_components(&parts)
}

/// (ρ_t, v_t) with ρ_t = −div(ρv), v_t = −v·∇v + Δv/ρ ∓ ∇Kρ.
pub fn rhs_eulerian(state: &FluidState, sign: Sign, rho_min: f64) -> Result<(SpectralField, SpectralField)> {
    let inv = reciprocal(&state.rho, rho_min, state.t)?;
    let rho_t = state.rho.product(&state.v)?.divergence()?.scale(-1.0);
    let mut v_t = inv.product(&state.v.laplacian())?;
    v_t.axpy(-1.0, &advection(&state.v, &state.v)?)?;
    v_t.axpy(sign.factor(), &potential_force(&state.rho)?)?;
    Ok((rho_t, v_t))
}

/// Grid values of several Hermitian spectra, two per complex transform.
fn to_grid(specs: &[&[Complex64]], g: TorusGrid) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(specs.len());
    for pair in specs.chunks(2) {
        if let [a, b] = pair {
            let (va, vb) = inverse_real_pair(a, b, g.dim(), g.n());
            out.push(va);
            out.push(vb);
        } else {
            let zero = vec![Complex64::new(0.0, 0.0); pair[0].len()];
            out.push(inverse_real_pair(pair[0], &zero, g.dim(), g.n()).0);
        }
    }
    out
}

/// Normalized, dealiased spectra of several real grid arrays.
fn from_grid(vals: &[Vec<f64>], g: TorusGrid, keep: &[bool]) -> Vec<Vec<Complex64>> {
    let scale = 1.0 / g.len() as f64;
    let finish = |mut c: Vec<Complex64>| {
        for (x, k) in c.iter_mut().zip(keep) {
            *x = if *k { *x * scale } else { Complex64::new(0.0, 0.0) };
        }
        c
    };
    let mut out = Vec::with_capacity(vals.len());
    for pair in vals.chunks(2) {
        let (fa, fb) = match pair {
            [a, b] => forward_real_pair(a, b, g.dim(), g.n()),
            _ => forward_real_pair(&pair[0], &vec![0.0; pair[0].len()], g.dim(), g.n()),
        };
        out.push(finish(fa));
        if pair.len() == 2 {
            out.push(finish(fb));
        }
    }
    out
}

/// Explicit parts (ρ_t, m_t − Δm) in conservative variables. Products are
/// formed on the grid from dealiased factors and dealiased afterwards, the
/// same rule as `SpectralField::product`.
fn rhs_conservative(s: &Conservative, sign: Sign, rho_min: f64) -> Result<(SpectralField, SpectralField)> {
    let g = s.rho.grid();
    let d = g.dim();
    let len = g.len();
    let keep = g.dealias_mask();
    let rho = s.rho.dealiased();
    let m = s.m.dealiased();
    let mut specs: Vec<&[Complex64]> = vec![rho.coeffs()];
    specs.extend((0..d).map(|a| m.component_slice(a)));
    let mut vals = to_grid(&specs, g);
    let mv = vals.split_off(1);
    let rv = vals.pop().expect("density values");
    let min = rv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > rho_min) {
        return Err(Error::Positivity { t: s.t, min_rho: min });
    }
    // v = m/ρ, dealiased
    let raw: Vec<Vec<f64>> = mv.iter().map(|ma| ma.iter().zip(&rv).map(|(x, r)| x / r).collect()).collect();
    let v = SpectralField::from_coeffs(g, d, from_grid(&raw, g, &keep).concat())?;
    let force = potential_force(&rho)?;
    let mut specs: Vec<&[Complex64]> = (0..d).map(|a| v.component_slice(a)).collect();
    specs.extend((0..d).map(|a| force.component_slice(a)));
    let mut vals = to_grid(&specs, g);
    let fv = vals.split_off(d);
    let vv = vals;
    // fluxes m_a v_b, then ρ ∂_aΨ
    let mut prods: Vec<Vec<f64>> = Vec::with_capacity(d * d + d);
    for a in 0..d {
        for b in 0..d {
            prods.push(mv[a].iter().zip(&vv[b]).map(|(x, y)| x * y).collect());
        }
    }
    for fa in &fv {
        prods.push(fa.iter().zip(&rv).map(|(x, r)| x * r).collect());
    }
    let pc = from_grid(&prods, g, &keep);
    let ks = g.wavevectors();
    let n = g.n();
    let sym = |f: usize, b: usize| if ks[f][b] == (n / 2) as i64 { 0.0 } else { ks[f][b] as f64 };
    let mut mt = vec![Complex64::new(0.0, 0.0); d * len];
    for a in 0..d {
        let out = &mut mt[a * len..(a + 1) * len];
        for f in 0..len {
            let mut acc = sign.factor() * pc[d * d + a][f];
            for b in 0..d {
                acc -= Complex64::new(0.0, sym(f, b)) * pc[a * d + b][f];
            }
            out[f] = acc;
        }
    }
    let mut m_t = SpectralField::from_coeffs(g, d, mt)?;
    m_t.axpy(1.0, &v.sub(&m)?.laplacian())?;
    let rho_t = m.divergence()?.scale(-1.0);
    Ok((rho_t, m_t))
}

fn heat_factor(f: &SpectralField, dt: f64) -> SpectralField {
    let k2 = f.grid().k_squared();
    let len = k2.len();
    let mut out = f.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= (-k2[i % len] * dt).exp();
    }
    out
}

/// One integrating-factor Heun step of size `dt`.
pub fn step_conservative(s: &Conservative, dt: f64, sign: Sign, rho_min: f64) -> Result<Conservative> {
    let (r0, n0) = rhs_conservative(s, sign, rho_min)?;
    let mut rho1 = s.rho.clone();
    rho1.axpy(dt, &r0)?;
    let mut m_pred = s.m.clone();
    m_pred.axpy(dt, &n0)?;
    let stage = Conservative { rho: rho1, m: heat_factor(&m_pred, dt), t: s.t + dt };
    let (r1, n1) = rhs_conservative(&stage, sign, rho_min)?;
    let mut rho = s.rho.clone();
    rho.axpy(0.5 * dt, &r0)?;
    rho.axpy(0.5 * dt, &r1)?;
    let mut m = s.m.clone();
    m.axpy(0.5 * dt, &n0)?;
    let mut m = heat_factor(&m, dt);
    m.axpy(0.5 * dt, &n1)?;
    positivity(&rho, rho_min, s.t + dt)?;
    let drift = (rho.mean_scalar() - s.rho.mean_scalar()).abs();
    debug_assert!(drift < 1e-12, "mean density drifted by {drift}");
    Ok(Conservative { rho, m, t: s.t + dt })
}

/// dt_eff = min(dt, cfl·Δx/(‖v‖_∞ + 1e−12)).
pub fn effective_dt(state: &FluidState, cfg: &SimConfig) -> f64 {
    let vmax = state.v.max_abs_on_grid();
    cfg.dt.min(cfg.cfl * state.grid().spacing() / (vmax + 1e-12))
}

/// One step of the configured scheme on a primitive state.
pub fn step(state: &FluidState, cfg: &SimConfig) -> Result<FluidState> {
    let dt = effective_dt(state, cfg);
    if dt < 1e-10 {
        return Err(Error::CflCollapse { t: state.t, dt });
    }
    let next = step_conservative(&Conservative::from_state(state)?, dt, cfg.sign, cfg.rho_min)?;
    next.to_state(cfg.rho_min)
}

#[derive(Clone, Debug, Serialize)]
pub struct Abort {
    pub reason: String,
    pub state: StateDump,
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub records: Vec<DiagnosticsRecord>,
    /// States at the sample times when requested.
    pub states: Vec<FluidState>,
    pub abort: Option<Abort>,
    pub steps: usize,
}

/// Integrate to `cfg.t_end`, recording diagnostics every `cfg.sample_every`
/// steps and at the final time. Positivity loss or CFL collapse end the run
/// with an `Abort` record instead of an error.
pub fn simulate(initial: &FluidState, cfg: &SimConfig, keep_states: bool) -> Result<SimOutput> {
    cfg.validate()?;
    if initial.min_rho() <= cfg.rho_min {
        return Err(Error::Positivity { t: initial.t, min_rho: initial.min_rho() });
    }
    let mut tracker = Tracker::new(initial, cfg.p)?;
    let mut cons = Conservative::from_state(initial)?;
    let mut prim = initial.clone();
    let mut out = SimOutput { records: Vec::new(), states: Vec::new(), abort: None, steps: 0 };
    let sample = |prim: &FluidState, out: &mut SimOutput, tracker: &mut Tracker| -> Result<()> {
        let (rho_t, v_t) = rhs_eulerian(prim, cfg.sign, cfg.rho_min)?;
        out.records.push(tracker.record(prim, &rho_t, &v_t)?);
        if keep_states {
            out.states.push(prim.clone());
        }
        Ok(())
    };
    sample(&prim, &mut out, &mut tracker)?;
    let t_end = initial.t + cfg.t_end;
    let dx = initial.grid().spacing();
    let mut since = 0;
    let dump = |c: &Conservative| c.to_state(0.0).map(|p| p.dump());
    while cons.t < t_end - 1e-12 {
        let mut dt = cfg.dt.min(cfg.cfl * dx / (cons.speed_max() + 1e-12));
        if dt < 1e-10 {
            out.abort = Some(Abort { reason: Error::CflCollapse { t: cons.t, dt }.to_string(), state: dump(&cons)? });
            break;
        }
        if cons.t + dt > t_end - 1e-9 {
            dt = t_end - cons.t;
        }
        match step_conservative(&cons, dt, cfg.sign, cfg.rho_min) {
            Ok(c) => {
                cons = c;
                out.steps += 1;
                since += 1;
                if since == cfg.sample_every || cons.t >= t_end - 1e-12 {
                    since = 0;
                    prim = cons.to_state(cfg.rho_min)?;
                    sample(&prim, &mut out, &mut tracker)?;
                }
            }
            Err(e @ Error::Positivity { .. }) => {
                out.abort = Some(Abort { reason: e.to_string(), state: dump(&cons)? });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
