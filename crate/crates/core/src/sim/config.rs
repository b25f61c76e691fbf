use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    /// −∇Kρ, the model as written.
    Repulsive,
    /// +∇Kρ.
    Attractive,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Repulsive => -1.0,
            Sign::Attractive => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Integrating factor on Δ, Heun's method on the rest.
    Ifrk2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum InitialData {
    /// ρ = 1 + ε cos x₁, v = 0.
    Cosine,
    /// ρ − 1 even and v odd random trig polynomials (so ∫ρv = 0),
    /// scaled to the initial budget ε.
    Random { band: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub d: usize,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub rho_min: f64,
    pub sign: Sign,
    pub scheme: Scheme,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Diagnostics are recorded every this many steps.
    pub sample_every: usize,
    /// Integrability index of the Besov budget.
    pub p: f64,
    /// Perturbation size.
    pub epsilon: f64,
    pub initial: InitialData,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            d: 3,
            n: 16,
            dt: 0.01,
            t_end: 50.0,
            cfl: 0.5,
            rho_min: 0.05,
            sign: Sign::Repulsive,
            scheme: Scheme::Ifrk2,
            seed: 0,
            output_dir: None,
            sample_every: 10,
            p: 2.5,
            epsilon: 1e-2,
            initial: InitialData::Cosine,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if !(self.t_end > 0.0) {
            return bad("t_end must be positive");
        }
        if !(self.rho_min > 0.0) {
            return bad("rho_min must be positive");
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl must lie in (0, 1]");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if !(self.p >= 1.0) {
            return bad("p must be at least 1");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be non-negative");
        }
        crate::TorusGrid::new(self.d, self.n)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn grid(&self) -> crate::TorusGrid {
        crate::TorusGrid::new(self.d, self.n).expect("validated grid")
    }
}
