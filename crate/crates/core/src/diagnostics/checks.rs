//! Configurations and drivers for the Besov, Lagrangian and Picard
//! experiments of the command-line interface.

use serde::{Deserialize, Serialize};

use crate::besov::{
    blocks, certify_embedding, certify_max_regularity, certify_nikolskij, certify_product_law, CertificateReport,
    EmbeddingConfig, MaxRegularityConfig, NikolskijConfig, ProductLawConfig,
};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lagrangian::{co_advance, equivalence_check, EquivalenceReport};
use crate::linear::solve_linear_system;
use crate::rng::{random_trig_polynomial, rng_for};
use crate::sim::{compare_with_eulerian, lagrangian_residual, picard_data, picard_iterate, FluidState, PicardConfig, PicardStep, SimConfig};
use crate::TorusGrid;

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesovCertifyConfig {
    /// Random fields used for the block resummation check.
    pub resum_samples: usize,
    pub nikolskij: NikolskijConfig,
    pub embedding: EmbeddingConfig,
    pub product_law: ProductLawConfig,
    pub max_regularity: MaxRegularityConfig,
}

impl Default for BesovCertifyConfig {
    fn default() -> Self {
        Self {
            resum_samples: 20,
            nikolskij: NikolskijConfig::default(),
            embedding: EmbeddingConfig::default(),
            product_law: ProductLawConfig::default(),
            max_regularity: MaxRegularityConfig::default(),
        }
    }
}

impl BesovCertifyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.nikolskij.seed = seed;
        self.embedding.seed = seed;
        self.product_law.seed = seed;
        self.max_regularity.seed = seed;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.nikolskij.jobs = jobs;
        self.embedding.jobs = jobs;
        self.product_law.jobs = jobs;
        self.max_regularity.jobs = jobs;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BesovCertifyReport {
    /// max over samples of max |Σ_m P_m u − u| in coefficient space.
    pub resummation_error: f64,
    pub certificates: Vec<CertificateReport>,
    pub passed: bool,
}

pub fn besov_certify(cfg: &BesovCertifyConfig) -> Result<BesovCertifyReport> {
    let mut resummation_error: f64 = 0.0;
    for i in 0..cfg.resum_samples {
        let g = TorusGrid::new(3, 16)?;
        let u = random_trig_polynomial(g, 1, 7, 0.0, false, &mut rng_for(cfg.nikolskij.seed, 9000 + i as u64));
        resummation_error = resummation_error.max(blocks(&u).resum().max_coeff_diff(&u)?);
    }
    let certificates = vec![
        certify_nikolskij(&cfg.nikolskij)?,
        certify_embedding(&cfg.embedding)?,
        certify_product_law(&cfg.product_law)?,
        certify_max_regularity(&cfg.max_regularity)?,
    ];
    let passed = resummation_error < 1e-12 && certificates.iter().all(|c| c.pass);
    Ok(BesovCertifyReport { resummation_error, certificates, passed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LagrangianCheckConfig {
    /// Sup amplitude of the random band-1 perturbation.
    pub amplitude: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub sim: SimConfig,
}

impl Default for LagrangianCheckConfig {
    fn default() -> Self {
        Self {
            amplitude: 1e-4,
            tolerance: 1e-6,
            seed: 0,
            sim: SimConfig { t_end: 10.0, dt: 0.01, sample_every: 25, ..SimConfig::default() },
        }
    }
}

impl LagrangianCheckConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = parse(text)?;
        cfg.sim.validate()?;
        Ok(cfg)
    }
}

/// Linear-regime Eulerian run with a co-advanced map, compared with the
/// closed-form linear solution taken as the Lagrangian trajectory.
pub fn lagrangian_check(cfg: &LagrangianCheckConfig) -> Result<EquivalenceReport> {
    let g = cfg.sim.grid();
    let unit = |f: SpectralField| {
        let m = f.max_abs_on_grid();
        f.scale(cfg.amplitude / m)
    };
    let a0 = unit(random_trig_polynomial(g, 1, 1, 0.0, true, &mut rng_for(cfg.seed, 200)));
    let u0 = unit(random_trig_polynomial(g, g.dim(), 1, 0.0, true, &mut rng_for(cfg.seed, 201)));
    let run = co_advance(&FluidState::new(a0.add_constant(1.0), u0.clone())?, &cfg.sim)?;
    let lin = solve_linear_system(&a0, &u0, None, None, 1.0, &run.times)?;
    equivalence_check(&run, &lin.a, &lin.u, cfg.tolerance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardExperimentConfig {
    /// Number of ratios δ_n/δ_{n−1} that must include one below `contraction`.
    pub within: usize,
    pub contraction: f64,
    pub residual_tol: f64,
    /// Relative tolerance of the comparison with the Eulerian run (none to skip).
    pub eulerian_tol: Option<f64>,
    pub picard: PicardConfig,
}

impl Default for PicardExperimentConfig {
    fn default() -> Self {
        Self { within: 5, contraction: 0.5, residual_tol: 1e-6, eulerian_tol: Some(1e-4), picard: PicardConfig::default() }
    }
}

impl PicardExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = parse(text)?;
        cfg.picard.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardSummary {
    pub steps: Vec<PicardStep>,
    pub scale: f64,
    pub tail: f64,
    pub converged: bool,
    pub diverged: bool,
    pub max_contraction: Option<f64>,
    pub max_residual: f64,
    pub eulerian_mismatch: Option<f64>,
    pub passed: bool,
}

pub fn picard_experiment(cfg: &PicardExperimentConfig) -> Result<PicardSummary> {
    let p = &cfg.picard;
    let (a0, u0) = picard_data(p)?;
    let run = picard_iterate(&a0, &u0, p)?;
    let res = lagrangian_residual(&run.state.a, &run.state.u, p.dt)?;
    let max_residual = res.iter().map(|r| r.0.max(r.1)).fold(0.0, f64::max);
    let eulerian_mismatch = match cfg.eulerian_tol {
        Some(tol) => Some(compare_with_eulerian(&run.state, p, tol)?.1),
        None => None,
    };
    let max_contraction = run.max_contraction(cfg.within);
    let contracts = run.steps.len() <= 1 || max_contraction.is_some_and(|c| c < cfg.contraction);
    let passed = run.converged
        && !run.diverged
        && contracts
        && max_residual < cfg.residual_tol
        && match (eulerian_mismatch, cfg.eulerian_tol) {
            (Some(m), Some(t)) => m < t,
            _ => true,
        };
    Ok(PicardSummary {
        steps: run.steps,
        scale: run.scale,
        tail: run.tail,
        converged: run.converged,
        diverged: run.diverged,
        max_contraction,
        max_residual,
        eulerian_mismatch,
        passed,
    })
}
