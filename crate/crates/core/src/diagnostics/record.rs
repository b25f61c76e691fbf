use std::io::Write;

use serde::Serialize;

use crate::besov::{besov_from_blocks, block_norms};
use crate::error::Result;
use crate::field::SpectralField;
use crate::sim::FluidState;

/// Number of Besov budget entries.
pub const BUDGET_TERMS: usize = 6;

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// ½∫(ρ|v|² + ρKρ).
    pub energy: f64,
    /// ‖ρ − 1‖_{H^{−1}}.
    pub hminus1: f64,
    /// ∫|∇v|².
    pub dissipation: f64,
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub max_rho: f64,
    pub min_rho: f64,
    pub div_v_inf: f64,
    /// ∫₀ᵗ‖div v‖_∞, trapezoid over sample times.
    pub div_v_int: f64,
    /// sup‖ρ−1‖_{B^{d/p}}, ∫‖ρ_t‖_{B^{d/p}}, ∫‖ρ−1‖_{B^{d/p−2}},
    /// sup‖v‖_{B^{d/p−1}}, ∫‖v_t‖_{B^{d/p−1}}, ∫‖v−{v}‖_{B^{d/p+1}};
    /// sups and right-endpoint rectangle sums over sample times.
    pub budget: [f64; BUDGET_TERMS],
    /// sup‖ρ−1‖_{B^{d/p}} + ∫‖v_t‖_{B^{d/p−1}} + ∫‖v‖_{B^{d/p+1}}.
    pub budget_total: f64,
}

/// ‖ρ − 1‖²_{H^{−1}} = (2π)^d Σ_{k≠0} |ρ_k|²/|k|².
pub fn hminus1_sq(rho: &SpectralField) -> f64 {
    let k2 = rho.grid().k_squared();
    let s: f64 = rho.coeffs()[..k2.len()].iter().zip(k2.iter()).skip(1).map(|(c, k)| c.norm_sqr() / k).sum();
    rho.grid().volume() * s
}

/// ∫ρKρ evaluated as a spatial integral of the product.
pub fn potential_energy_integral(rho: &SpectralField) -> Result<f64> {
    Ok(rho.grid().volume() * rho.product(&rho.poisson_inverse())?.mean_scalar())
}

pub fn kinetic_energy(s: &FluidState) -> Result<f64> {
    Ok(0.5 * s.grid().volume() * s.rho.product(&s.v.dot(&s.v)?)?.mean_scalar())
}

pub fn energy(s: &FluidState) -> Result<f64> {
    Ok(kinetic_energy(s)? + 0.5 * hminus1_sq(&s.rho))
}

pub fn dissipation(v: &SpectralField) -> Result<f64> {
    Ok(v.grid().volume() * v.jacobian()?.energy_sum())
}

/// ∫ρv.
pub fn momentum(s: &FluidState) -> Result<Vec<f64>> {
    Ok(s.rho.product(&s.v)?.integral())
}

fn besov_l1(u: &SpectralField, p: f64, s: f64) -> Result<f64> {
    Ok(besov_from_blocks(&block_norms(u, p)?, s, 1.0))
}

/// ‖ρ₀ − 1‖_{B^{d/p}_{p,1}} + ‖v₀‖_{B^{d/p−1}_{p,1}}, given a = ρ₀ − 1.
pub fn initial_budget(a: &SpectralField, v: &SpectralField, p: f64) -> Result<f64> {
    let sc = a.grid().dim() as f64 / p;
    Ok(besov_l1(a, p, sc)? + besov_l1(v, p, sc - 1.0)?)
}

/// Instantaneous budget norms of a density perturbation a and velocity u
/// with their time derivatives: ‖a‖_{B^{d/p}}, ‖a_t‖_{B^{d/p}},
/// ‖a − {a}‖_{B^{d/p−2}}, ‖u‖_{B^{d/p−1}}, ‖u_t‖_{B^{d/p−1}},
/// ‖u − {u}‖_{B^{d/p+1}}, all with third index 1.
pub fn budget_norms(a: &SpectralField, a_t: &SpectralField, u: &SpectralField, u_t: &SpectralField, p: f64) -> Result<[f64; BUDGET_TERMS]> {
    let sc = a.grid().dim() as f64 / p;
    Ok([
        besov_l1(a, p, sc)?,
        besov_l1(a_t, p, sc)?,
        besov_l1(&a.without_mean(), p, sc - 2.0)?,
        besov_l1(u, p, sc - 1.0)?,
        besov_l1(u_t, p, sc - 1.0)?,
        besov_l1(&u.without_mean(), p, sc + 1.0)?,
    ])
}

/// Running sums and sups across sample times.
pub struct Tracker {
    p: f64,
    prev_t: Option<f64>,
    prev_div: f64,
    div_int: f64,
    budget: [f64; BUDGET_TERMS],
}

impl Tracker {
    pub fn new(_initial: &FluidState, p: f64) -> Result<Self> {
        Ok(Self { p, prev_t: None, prev_div: 0.0, div_int: 0.0, budget: [0.0; BUDGET_TERMS] })
    }

    /// Record the state with its time derivatives (ρ_t, v_t).
    pub fn record(&mut self, s: &FluidState, rho_t: &SpectralField, v_t: &SpectralField) -> Result<DiagnosticsRecord> {
        let inst = budget_norms(&s.rho.add_constant(-1.0), rho_t, &s.v, v_t, self.p)?;
        let div_inf = s.v.divergence()?.lp_norm(f64::INFINITY)?;
        match self.prev_t {
            None => {
                self.budget[0] = inst[0];
                self.budget[3] = inst[3];
            }
            Some(t0) => {
                let h = s.t - t0;
                self.div_int += 0.5 * h * (self.prev_div + div_inf);
                self.budget[0] = self.budget[0].max(inst[0]);
                self.budget[3] = self.budget[3].max(inst[3]);
                for i in [1, 2, 4, 5] {
                    self.budget[i] += h * inst[i];
                }
            }
        }
        self.prev_t = Some(s.t);
        self.prev_div = div_inf;
        let h1 = hminus1_sq(&s.rho);
        Ok(DiagnosticsRecord {
            t: s.t,
            energy: kinetic_energy(s)? + 0.5 * h1,
            hminus1: h1.sqrt(),
            dissipation: dissipation(&s.v)?,
            mass: s.rho.integral()[0],
            momentum: momentum(s)?,
            max_rho: s.max_rho(),
            min_rho: s.min_rho(),
            div_v_inf: div_inf,
            div_v_int: self.div_int,
            budget: self.budget,
            budget_total: self.budget[0] + self.budget[4] + self.budget[5],
        })
    }
}

/// One-shot record with no running history.
pub fn record(s: &FluidState, rho_t: &SpectralField, v_t: &SpectralField, p: f64) -> Result<DiagnosticsRecord> {
    Tracker::new(s, p)?.record(s, rho_t, v_t)
}

pub fn csv_header(d: usize) -> String {
    let mut cols = vec!["t", "energy", "hminus1", "dissipation", "mass"].into_iter().map(String::from).collect::<Vec<_>>();
    cols.extend((1..=d).map(|i| format!("momentum_{i}")));
    cols.extend(["max_rho", "min_rho", "div_v_inf", "div_v_int"].map(String::from));
    cols.extend((1..=BUDGET_TERMS).map(|i| format!("budget_s{i}")));
    cols.push("budget_total".into());
    cols.join(",")
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        let mut vals = vec![self.t, self.energy, self.hminus1, self.dissipation, self.mass];
        vals.extend(&self.momentum);
        vals.extend([self.max_rho, self.min_rho, self.div_v_inf, self.div_v_int]);
        vals.extend(self.budget);
        vals.push(self.budget_total);
        vals.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
    }
}

pub fn write_csv<W: Write>(mut w: W, records: &[DiagnosticsRecord], d: usize) -> std::io::Result<()> {
    writeln!(w, "{}", csv_header(d))?;
    for r in records {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Two-column `t value` files, one per tracked quantity, in `dir`.
pub fn write_dat_files(dir: &std::path::Path, records: &[DiagnosticsRecord], d: usize) -> std::io::Result<()> {
    let header = csv_header(d);
    let names: Vec<&str> = header.split(',').collect();
    let rows: Vec<Vec<String>> = records.iter().map(|r| r.csv_row().split(',').map(String::from).collect()).collect();
    for (c, name) in names.iter().enumerate().skip(1) {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.dat")))?);
        writeln!(f, "# t {name}")?;
        for row in &rows {
            writeln!(f, "{} {}", row[0], row[c])?;
        }
    }
    Ok(())
}
