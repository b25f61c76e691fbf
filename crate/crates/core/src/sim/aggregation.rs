//! The quasi-stationary aggregation equation ρ_t = K div(ρ∇Kρ), K = (−Δ)^{−1}.

use serde::Serialize;

use super::config::SimConfig;
use super::euler::{potential_force, positivity};
use crate::error::{Error, Result};
use crate::field::SpectralField;

#[derive(Clone, Debug, Serialize)]
pub struct AggregationRecord {
    pub t: f64,
    pub mean: f64,
    pub max_rho: f64,
    pub min_rho: f64,
    /// ‖ρ − {ρ}‖₂.
    pub perturbation: f64,
}

#[derive(Clone, Debug)]
pub struct AggregationOutput {
    pub records: Vec<AggregationRecord>,
    pub states: Vec<SpectralField>,
    pub abort: Option<String>,
}

/// K div(ρ∇Kρ). The result has zero mean.
pub fn aggregation_rhs(rho: &SpectralField, rho_min: f64, t: f64) -> Result<SpectralField> {
    positivity(rho, rho_min, t)?;
    Ok(rho.product(&potential_force(rho)?)?.divergence()?.poisson_inverse())
}

/// One Heun step.
pub fn aggregation_step(rho: &SpectralField, dt: f64, rho_min: f64, t: f64) -> Result<SpectralField> {
    let k0 = aggregation_rhs(rho, rho_min, t)?;
    let mut pred = rho.clone();
    pred.axpy(dt, &k0)?;
    let k1 = aggregation_rhs(&pred, rho_min, t + dt)?;
    let mut out = rho.clone();
    out.axpy(0.5 * dt, &k0)?;
    out.axpy(0.5 * dt, &k1)?;
    Ok(out)
}

fn record(rho: &SpectralField, t: f64) -> Result<AggregationRecord> {
    let vals = rho.to_values();
    Ok(AggregationRecord {
        t,
        mean: rho.mean_scalar(),
        max_rho: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_rho: vals.iter().copied().fold(f64::INFINITY, f64::min),
        perturbation: rho.without_mean().lp_norm(2.0)?,
    })
}

/// Integrate with the fixed step `cfg.dt` to `cfg.t_end`, sampling every
/// `cfg.sample_every` steps and at the end.
pub fn aggregation_simulate(rho: &SpectralField, cfg: &SimConfig, keep_states: bool) -> Result<AggregationOutput> {
    cfg.validate()?;
    if rho.comps() != 1 {
        return Err(Error::Shape { expected: 1, got: rho.comps() });
    }
    if (rho.mean_scalar() - 1.0).abs() > 1e-12 {
        return Err(Error::Param(format!("aggregation needs mean density 1, got {}", rho.mean_scalar())));
    }
    let mut out = AggregationOutput { records: vec![record(rho, 0.0)?], states: Vec::new(), abort: None };
    if keep_states {
        out.states.push(rho.clone());
    }
    let steps = (cfg.t_end / cfg.dt).ceil() as usize;
    let dt = cfg.t_end / steps as f64;
    let mut cur = rho.clone();
    for i in 1..=steps {
        let t = (i - 1) as f64 * dt;
        cur = match aggregation_step(&cur, dt, cfg.rho_min, t) {
            Ok(r) => r,
            Err(e @ Error::Positivity { .. }) => {
                out.abort = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        if i % cfg.sample_every == 0 || i == steps {
            out.records.push(record(&cur, i as f64 * dt)?);
            if keep_states {
                out.states.push(cur.clone());
            }
        }
    }
    Ok(out)
}
