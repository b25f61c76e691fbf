use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::linear::roots_for;
use crate::sim::{initial_state, simulate, InitialData, SimConfig, Sign};
use crate::stats::linear_fit;

use super::record::DiagnosticsRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LinearVerify,
    Simulate,
    Sweep,
    Spectrum,
    LagrangianCheck,
    BesovCertify,
    Picard,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::LinearVerify => "linear-verify",
            Self::Simulate => "simulate",
            Self::Sweep => "sweep",
            Self::Spectrum => "spectrum",
            Self::LagrangianCheck => "lagrangian-check",
            Self::BesovCertify => "besov-certify",
            Self::Picard => "picard",
        }
    }
}

/// What to run, from which config, with which seed, and where to write.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl ExperimentSpec {
    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        let probe = self.out.join(".tslab-write-probe");
        std::fs::write(&probe, b"")?;
        std::fs::remove_file(probe)?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    /// Attractive-sign control run at this ε (none to skip).
    pub control_epsilon: Option<f64>,
    /// Allowed |slope| of log C_emp against log ε.
    pub slope_band: f64,
    /// Allowed relative spread max C_emp / min C_emp − 1.
    pub spread_band: f64,
    /// Required amplification of the control run over the repulsive one.
    pub control_factor: f64,
    pub sim: SimConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-2, 3e-3, 1e-3],
            control_epsilon: Some(1e-2),
            slope_band: 0.15,
            spread_band: 0.15,
            control_factor: 2.0,
            sim: SimConfig { initial: InitialData::Random { band: 2 }, ..SimConfig::default() },
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::Config("epsilons must be a non-empty list of non-negative numbers".into()));
        }
        if let Some(e) = self.control_epsilon {
            if !(e > 0.0) {
                return Err(Error::Config("control_epsilon must be positive".into()));
            }
        }
        self.sim.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRun {
    pub epsilon: f64,
    pub sign: Sign,
    /// sup_t budget_total(t)/ε, 0 for ε = 0.
    pub c_emp: f64,
    pub final_t: f64,
    pub abort: Option<String>,
    #[serde(skip)]
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub runs: Vec<SweepRun>,
    /// Slope of log C_emp against log ε over the positive ε.
    pub slope: f64,
    pub spread: f64,
    pub control: Option<SweepRun>,
    /// Control C_emp over the repulsive C_emp at the same ε (infinite on abort).
    pub control_amplification: Option<f64>,
    pub flat: bool,
    pub control_unstable: bool,
    pub passed: bool,
}

fn sweep_run(sim: &SimConfig, epsilon: f64, sign: Sign) -> Result<SweepRun> {
    let cfg = SimConfig { epsilon, sign, ..sim.clone() };
    let init = initial_state(&cfg)?;
    let out = simulate(&init, &cfg, false)?;
    let sup = out.records.iter().map(|r| r.budget_total).fold(0.0, f64::max);
    Ok(SweepRun {
        epsilon,
        sign,
        c_emp: if epsilon > 0.0 { sup / epsilon } else { 0.0 },
        final_t: out.records.last().map_or(0.0, |r| r.t),
        abort: out.abort.map(|a| a.reason),
        records: out.records,
    })
}

/// Runs the repulsive model for every ε (and the attractive control) on
/// `jobs` workers and checks that the empirical amplification is flat in ε.
pub fn stability_sweep(cfg: &SweepConfig, jobs: usize) -> Result<SweepReport> {
    cfg.validate()?;
    let mut tasks: Vec<(f64, Sign)> = cfg.epsilons.iter().map(|&e| (e, Sign::Repulsive)).collect();
    if let Some(e) = cfg.control_epsilon {
        tasks.push((e, Sign::Attractive));
    }
    let results = crate::par::par_map(tasks.len(), jobs, |i| sweep_run(&cfg.sim, tasks[i].0, tasks[i].1));
    let mut runs = Vec::new();
    for r in results {
        runs.push(r?);
    }
    let control = cfg.control_epsilon.map(|_| runs.pop().expect("control run"));

    let positive: Vec<&SweepRun> = runs.iter().filter(|r| r.epsilon > 0.0).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = positive.iter().map(|r| (r.epsilon.ln(), r.c_emp.ln())).unzip();
    let slope = linear_fit(&x, &y).0;
    let cmax = positive.iter().map(|r| r.c_emp).fold(0.0, f64::max);
    let cmin = positive.iter().map(|r| r.c_emp).fold(f64::INFINITY, f64::min);
    let spread = if positive.is_empty() { 0.0 } else { cmax / cmin - 1.0 };
    let all_completed = runs.iter().all(|r| r.abort.is_none());
    let flat = all_completed && slope.abs() <= cfg.slope_band && spread <= cfg.spread_band;

    let control_amplification = control.as_ref().map(|c| {
        if c.abort.is_some() {
            return f64::INFINITY;
        }
        let base = runs.iter().find(|r| r.epsilon == c.epsilon).map(|r| r.c_emp);
        match base {
            Some(b) if b > 0.0 => c.c_emp / b,
            // No matching repulsive run: compare with the initial budget.
            _ => c.records.first().map_or(0.0, |r0| c.c_emp * c.epsilon / r0.budget_total.max(f64::MIN_POSITIVE)),
        }
    });
    let control_unstable = control_amplification.map_or(true, |a| a > cfg.control_factor);
    Ok(SweepReport { runs, slope, spread, control, control_amplification, flat, control_unstable, passed: flat && control_unstable })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayFitConfig {
    pub nu: f64,
    /// Fraction of the run at the start that is excluded from the fit.
    pub skip_fraction: f64,
    pub min_tail: usize,
    /// Relative tolerance on the slowest shell's rate.
    pub rate_tol: f64,
}

impl Default for DecayFitConfig {
    fn default() -> Self {
        Self { nu: 1.0, skip_fraction: 0.5, min_tail: 20, rate_tol: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShellRate {
    pub k2: i64,
    /// −slope of log‖P_shell v‖²₂ on the tail.
    pub rate: f64,
    /// 2|Re λ₊| at this |k|².
    pub predicted: f64,
    /// true when the fit used the local maxima of an oscillating tail.
    pub peaks: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub shells: Vec<ShellRate>,
    /// No shell carries energy in the tail.
    pub degenerate: bool,
    /// Rate of the slowest (highest |k|²) shell is within rate_tol of prediction.
    pub slowest_matches: bool,
    /// Rates decrease with |k|² for shells with ν²|k|⁴ > 4.
    pub monotone_beyond_band: bool,
}

fn shell_energies(v: &SpectralField) -> BTreeMap<i64, f64> {
    let g = v.grid();
    let len = g.len();
    let k2 = g.k_squared();
    let vol = g.volume();
    let mut out = BTreeMap::new();
    for f in 1..len {
        let e: f64 = (0..v.comps()).map(|c| v.coeffs()[c * len + f].norm_sqr()).sum();
        *out.entry(k2[f].round() as i64).or_insert(0.0) += vol * e;
    }
    out
}

fn local_maxima(y: &[f64]) -> Vec<usize> {
    (1..y.len().saturating_sub(1)).filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1]).collect()
}

/// Fits per-shell decay rates of ‖v‖²₂ over the tail of a trajectory.
/// Oscillating shells (at least three interior maxima) are fitted through
/// their peaks, the others through every tail sample.
pub fn decay_fit(times: &[f64], v: &[SpectralField], cfg: &DecayFitConfig) -> Result<DecayFit> {
    if times.len() != v.len() {
        return Err(Error::TimeGrid(format!("{} times for {} fields", times.len(), v.len())));
    }
    let t0 = times.first().copied().unwrap_or(0.0);
    let t1 = times.last().copied().unwrap_or(0.0);
    let start = t0 + cfg.skip_fraction * (t1 - t0);
    let tail: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= start - 1e-12).collect();
    if tail.len() < cfg.min_tail {
        return Err(Error::TooShort(tail.len()));
    }
    let energies: Vec<BTreeMap<i64, f64>> = tail.iter().map(|&i| shell_energies(&v[i])).collect();
    let global = energies.iter().flat_map(|m| m.values()).fold(0.0, |a: f64, &b| a.max(b));
    let mut shells = Vec::new();
    if global > 0.0 {
        let keys: Vec<i64> = energies[0].keys().copied().collect();
        for k2 in keys {
            let series: Vec<f64> = energies.iter().map(|m| m[&k2]).collect();
            let floor = 1e-26 * global;
            if series.iter().fold(0.0, |a: f64, &b| a.max(b)) < 1e-20 * global {
                continue;
            }
            let ts: Vec<f64> = tail.iter().map(|&i| times[i]).collect();
            let peaks = local_maxima(&series);
            let idx: Vec<usize> = if peaks.len() >= 3 { peaks.clone() } else { (0..series.len()).collect() };
            let (x, y): (Vec<f64>, Vec<f64>) =
                idx.iter().filter(|&&i| series[i] > floor).map(|&i| (ts[i], series[i].ln())).unzip();
            if x.len() < 2 {
                continue;
            }
            let lam = roots_for(cfg.nu * k2 as f64).0;
            shells.push(ShellRate { k2, rate: -linear_fit(&x, &y).0, predicted: 2.0 * lam.re.abs(), peaks: peaks.len() >= 3 });
        }
    }
    let degenerate = shells.is_empty();
    let slowest_matches =
        shells.last().is_some_and(|s| (s.rate - s.predicted).abs() <= cfg.rate_tol * s.predicted);
    let beyond: Vec<&ShellRate> = shells.iter().filter(|s| (cfg.nu * s.k2 as f64).powi(2) > 4.0).collect();
    let monotone_beyond_band = beyond.windows(2).all(|w| w[1].rate < w[0].rate);
    Ok(DecayFit { shells, degenerate, slowest_matches, monotone_beyond_band })
}
