//! Picard construction of small solutions in Lagrangian coordinates.
//!
//! With η = 1 + a and A = (∇X)^{-1}, X = id + ∫u, the system
//!   a_t + (1+a) div_u u = 0,
//!   (1+a) u_t − Δ_u u = −(1+a) ∇_u(−Δ_u)^{-1} a
//! is the linear Stokes system a_t + div u = h, u_t − Δu + ∇Ka = g with
//!   h = −a div u + (1+a)(div − div_u)u,
//!   g = −a∇Ka − a u_t + (Δ_u − Δ)u + (1+a)(∇Ka − ∇_u(−Δ_u)^{-1}a).
//! Each iterate solves that system with h, g built from the previous one.

use serde::{Deserialize, Serialize};

use super::config::{InitialData, SimConfig};
use crate::diagnostics::{budget_norms, BUDGET_TERMS};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lagrangian::{
    advance_map, co_advance, commutator_laplacian, divergence_u, equivalence_check, gradient_u,
    lagrangian_inverse_laplacian, laplacian_u, DeformationState, EquivalenceReport,
};
use crate::linear::{solve_linear_system, time_derivative};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardConfig {
    pub d: usize,
    pub n: usize,
    /// Size of the initial data.
    pub epsilon: f64,
    pub initial: InitialData,
    pub seed: u64,
    /// Sampling step of the time grid.
    pub dt: f64,
    /// Final time T of the truncated horizon [0, T].
    pub horizon: f64,
    pub max_iterates: usize,
    /// Stop once δ_n falls below tol times the size of the first iterate.
    pub tol: f64,
    pub p: f64,
    /// Step of the Eulerian reference run.
    pub euler_dt: f64,
    /// Spacing of the comparison times against the Eulerian run.
    pub compare_every: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            d: 3,
            n: 16,
            epsilon: 1e-3,
            initial: InitialData::Cosine,
            seed: 0,
            dt: 0.05,
            horizon: 20.0,
            max_iterates: 8,
            tol: 1e-10,
            p: 2.5,
            euler_dt: 0.005,
            compare_every: 0.5,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.dt > 0.0 && self.horizon > 0.0 && self.euler_dt > 0.0) {
            return bad("dt, horizon and euler_dt must be positive");
        }
        if self.horizon / self.dt < 4.0 {
            return bad("horizon must span at least four time steps");
        }
        let ratio = self.compare_every / self.dt;
        if !(ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
            return bad("compare_every must be a positive multiple of dt");
        }
        let ratio = self.compare_every / self.euler_dt;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return bad("compare_every must be a multiple of euler_dt");
        }
        if self.max_iterates == 0 {
            return bad("max_iterates must be at least 1");
        }
        self.sim_config().validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Eulerian configuration with the same grid, data and comparison times.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            d: self.d,
            n: self.n,
            dt: self.euler_dt,
            t_end: self.horizon,
            epsilon: self.epsilon,
            initial: self.initial,
            seed: self.seed,
            p: self.p,
            sample_every: (self.compare_every / self.euler_dt).round().max(1.0) as usize,
            ..SimConfig::default()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let steps = (self.horizon / self.dt).round() as usize;
        (0..=steps).map(|i| i as f64 * self.dt).collect()
    }
}

/// Forcings on the time grid together with what the map looked like.
#[derive(Clone, Debug)]
pub struct Forcings {
    pub h: Vec<SpectralField>,
    pub g: Vec<SpectralField>,
    /// Final accumulated ‖∫∇u‖ proxy.
    pub gamma: f64,
    /// Largest iteration count of the Lagrangian elliptic solves.
    pub elliptic_iterations: usize,
}

/// The maps X(t_n) = id + ∫₀^{t_n} u along a sampled trajectory.
fn maps_along(u: &[SpectralField], dt: f64) -> Result<Vec<DeformationState>> {
    let mut maps = vec![DeformationState::identity(u[0].grid())];
    for w in u.windows(2) {
        let next = advance_map(maps.last().expect("identity first"), &w[0], &w[1], dt)?;
        if next.gamma >= 0.5 {
            return Err(Error::NeumannSmallness(next.gamma));
        }
        maps.push(next);
    }
    Ok(maps)
}

fn componentwise<F: Fn(&SpectralField) -> Result<SpectralField>>(u: &SpectralField, f: F) -> Result<SpectralField> {
    let parts = (0..u.comps()).map(|c| f(&u.component(c))).collect::<Result<Vec<_>>>()?;
    SpectralField::from_components(&parts)
}

/// h and g of a trajectory (a, u) sampled with step `dt`.
pub fn lagrangian_forcings(a: &[SpectralField], u: &[SpectralField], dt: f64) -> Result<Forcings> {
    let maps = maps_along(u, dt)?;
    let mut out = Forcings { h: Vec::with_capacity(a.len()), g: Vec::with_capacity(a.len()), gamma: 0.0, elliptic_iterations: 0 };
    for (n, def) in maps.iter().enumerate() {
        let (an, un) = (&a[n], &u[n]);
        let eta = an.add_constant(1.0);
        let div = un.divergence()?;
        let div_gap = div.sub(&divergence_u(un, &def.a)?)?;
        out.h.push(an.product(&div)?.scale(-1.0).add(&eta.product(&div_gap)?)?);

        let grad_k = an.poisson_inverse().gradient()?;
        let (f, rep) = lagrangian_inverse_laplacian(an, &def.a)?;
        out.elliptic_iterations = out.elliptic_iterations.max(rep.iterations);
        let ut = time_derivative(u, dt, n)?;
        let mut g = an.product(&grad_k.add(&ut)?)?.scale(-1.0);
        g.axpy(1.0, &componentwise(un, |c| commutator_laplacian(c, &def.a))?)?;
        g.axpy(1.0, &eta.product(&grad_k.sub(&gradient_u(&f, &def.a)?)?)?)?;
        out.g.push(g);
    }
    out.gamma = maps.last().map_or(0.0, |m| m.gamma);
    Ok(out)
}

/// L² residuals of the two Lagrangian equations at every sample time, with
/// time derivatives by fourth-order finite differences.
pub fn lagrangian_residual(a: &[SpectralField], u: &[SpectralField], dt: f64) -> Result<Vec<(f64, f64)>> {
    let maps = maps_along(u, dt)?;
    let mut out = Vec::with_capacity(a.len());
    for (n, def) in maps.iter().enumerate() {
        let eta = a[n].add_constant(1.0);
        let ra = time_derivative(a, dt, n)?.add(&eta.product(&divergence_u(&u[n], &def.a)?)?)?;
        let (f, _) = lagrangian_inverse_laplacian(&a[n], &def.a)?;
        let mut ru = eta.product(&time_derivative(u, dt, n)?.add(&gradient_u(&f, &def.a)?)?)?;
        ru.axpy(-1.0, &componentwise(&u[n], |c| laplacian_u(c, &def.a))?)?;
        out.push((ra.lp_norm(2.0)?, ru.lp_norm(2.0)?));
    }
    Ok(out)
}

/// Budget distance between two sampled trajectories: sups of the first and
/// fourth norms and right-endpoint rectangle sums of the others.
pub fn budget_distance(
    a1: &[SpectralField],
    u1: &[SpectralField],
    a2: &[SpectralField],
    u2: &[SpectralField],
    dt: f64,
    p: f64,
) -> Result<[f64; BUDGET_TERMS]> {
    let da = a1.iter().zip(a2).map(|(x, y)| x.sub(y)).collect::<Result<Vec<_>>>()?;
    let du = u1.iter().zip(u2).map(|(x, y)| x.sub(y)).collect::<Result<Vec<_>>>()?;
    let mut out = [0.0f64; BUDGET_TERMS];
    for n in 0..da.len() {
        let inst = budget_norms(&da[n], &time_derivative(&da, dt, n)?, &du[n], &time_derivative(&du, dt, n)?, p)?;
        out[0] = out[0].max(inst[0]);
        out[3] = out[3].max(inst[3]);
        if n > 0 {
            for i in [1, 2, 4, 5] {
                out[i] += dt * inst[i];
            }
        }
    }
    Ok(out)
}

/// One completed iterate.
#[derive(Clone, Debug, Serialize)]
pub struct PicardStep {
    pub n: usize,
    /// Six budget terms of the distance to the previous iterate.
    pub delta_terms: [f64; BUDGET_TERMS],
    pub delta: f64,
    /// δ_n/δ_{n−1}.
    pub contraction: Option<f64>,
    pub gamma: f64,
    pub elliptic_iterations: usize,
}

/// The current iterate on the time grid and the forcings that produced it.
#[derive(Clone, Debug)]
pub struct PicardState {
    pub n: usize,
    pub times: Vec<f64>,
    pub a: Vec<SpectralField>,
    pub u: Vec<SpectralField>,
    pub h: Vec<SpectralField>,
    pub g: Vec<SpectralField>,
    pub delta: f64,
}

#[derive(Clone, Debug)]
pub struct PicardRun {
    pub steps: Vec<PicardStep>,
    pub state: PicardState,
    /// Budget size of the first iterate.
    pub scale: f64,
    pub converged: bool,
    /// Set when δ_n grew on two consecutive iterates.
    pub diverged: bool,
    /// ‖a(T)‖_{B^{d/p}} + ‖u(T)‖_{B^{d/p−1}}, what the truncated horizon leaves out.
    pub tail: f64,
}

impl PicardRun {
    /// Largest δ_n/δ_{n−1} among the first `within` ratios.
    pub fn max_contraction(&self, within: usize) -> Option<f64> {
        self.steps.iter().filter_map(|s| s.contraction).take(within).reduce(f64::max)
    }
}

/// Iterate from the linear solution S(0, 0) until δ_n is below
/// `cfg.tol`·scale, δ_n grows twice in a row, or `cfg.max_iterates` is hit.
pub fn picard_iterate(a0: &SpectralField, u0: &SpectralField, cfg: &PicardConfig) -> Result<PicardRun> {
    cfg.validate()?;
    let times = cfg.times();
    let dt = cfg.dt;
    let first = solve_linear_system(a0, u0, None, None, 1.0, &times)?;
    let g = a0.grid();
    let zero_a = vec![SpectralField::zeros(g, 1); times.len()];
    let zero_u = vec![SpectralField::zeros(g, g.dim()); times.len()];
    let scale: f64 = budget_distance(&first.a, &first.u, &zero_a, &zero_u, dt, cfg.p)?.iter().sum();
    drop((zero_a, zero_u));
    let mut state = PicardState { n: 0, times: times.clone(), a: first.a, u: first.u, h: Vec::new(), g: Vec::new(), delta: scale };
    let mut run = PicardRun { steps: Vec::new(), state: state.clone(), scale, converged: scale == 0.0, diverged: false, tail: 0.0 };
    let mut growth = 0;
    let mut prev_delta: Option<f64> = None;
    while !run.converged && state.n < cfg.max_iterates {
        let f = lagrangian_forcings(&state.a, &state.u, dt)?;
        let sol = solve_linear_system(a0, u0, Some(&f.h), Some(&f.g), 1.0, &times)?;
        let terms = budget_distance(&sol.a, &sol.u, &state.a, &state.u, dt, cfg.p)?;
        let delta: f64 = terms.iter().sum();
        let contraction = prev_delta.map(|d| if d > 0.0 { delta / d } else { 0.0 });
        growth = if contraction.is_some_and(|c| c > 1.0) { growth + 1 } else { 0 };
        state = PicardState { n: state.n + 1, times: times.clone(), a: sol.a, u: sol.u, h: f.h, g: f.g, delta };
        run.steps.push(PicardStep {
            n: state.n,
            delta_terms: terms,
            delta,
            contraction,
            gamma: f.gamma,
            elliptic_iterations: f.elliptic_iterations,
        });
        prev_delta = Some(delta);
        if growth >= 2 {
            run.diverged = true;
            break;
        }
        run.converged = delta <= cfg.tol * scale;
    }
    let sc = g.dim() as f64 / cfg.p;
    let last = times.len() - 1;
    run.tail = crate::besov::besov_norm(&state.a[last], crate::besov::BesovIndex::l1(sc, cfg.p))?
        + crate::besov::besov_norm(&state.u[last], crate::besov::BesovIndex::l1(sc - 1.0, cfg.p))?;
    run.state = state;
    Ok(run)
}

/// Initial data (a₀, u₀) of a Picard configuration; the same data as the
/// Eulerian run of `cfg.sim_config()`.
pub fn picard_data(cfg: &PicardConfig) -> Result<(SpectralField, SpectralField)> {
    let s = super::state::initial_state(&cfg.sim_config())?;
    Ok((s.rho.add_constant(-1.0), s.v))
}

/// Run the Eulerian model from the same data with a co-advanced map and
/// compare with the Picard iterate at times spaced `cfg.compare_every`.
/// Returns the report, with tolerance `rel_tol` times the largest sup-norm
/// of the compared Lagrangian fields, and the worst relative mismatch.
pub fn compare_with_eulerian(state: &PicardState, cfg: &PicardConfig, rel_tol: f64) -> Result<(EquivalenceReport, f64)> {
    let sim = cfg.sim_config();
    let initial = super::state::FluidState::new(state.a[0].add_constant(1.0), state.u[0].clone())?;
    let run = co_advance(&initial, &sim)?;
    let stride = (cfg.compare_every / cfg.dt).round() as usize;
    let a: Vec<_> = state.a.iter().step_by(stride).cloned().collect();
    let u: Vec<_> = state.u.iter().step_by(stride).cloned().collect();
    let scale = a.iter().chain(&u).map(|f| f.max_abs_on_grid()).fold(0.0, f64::max);
    let rep = equivalence_check(&run, &a, &u, rel_tol * scale.max(f64::MIN_POSITIVE))?;
    let rel = if scale > 0.0 { rep.worst.mismatch / scale } else { rep.worst.mismatch };
    Ok((rep, rel))
}
