//! Statistical certifiers. Each draws seeded random fields, evaluates the
//! ratio of the two sides of an inequality, and reports the empirical
//! maximum together with its stability under refinement.

use super::cutoff::phi;
use super::norm::{besov_norm, BesovIndex};
use crate::error::{Error, Result};
use crate::expint::phi1_real;
use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::lagrangian::map;
use crate::par::par_map;
use crate::rng::{half_box, rng_for, random_trig_polynomial};
use crate::stats::{linear_fit, simpson_weights};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub inequality: String,
    pub params: BTreeMap<String, f64>,
    pub samples: usize,
    pub seed: u64,
    pub empirical_max: f64,
    pub trend_slope: Option<f64>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_change: Option<f64>,
    /// Per-block maxima (Nikol'skij) or base/refined maxima (others).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profile: Vec<f64>,
    #[serde(default)]
    pub skipped: usize,
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn radius(k: &[i64]) -> f64 {
    (k.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt()
}

fn rel_change(base: f64, refined: f64) -> f64 {
    (refined / base - 1.0).abs()
}

/// Replace every coefficient c_k by |c_k| e^{-ik·x0}: all modes peak at x0.
fn cohere(u: &SpectralField, x0: &[f64]) -> SpectralField {
    let g = u.grid();
    let len = g.len();
    let mut out = u.clone();
    for (i, k) in g.wavevectors().iter().enumerate() {
        let phase: f64 = -k.iter().zip(x0).map(|(&ki, xi)| ki as f64 * xi).sum::<f64>();
        for c in 0..u.comps() {
            let v = u.coeffs()[c * len + i];
            out.coeffs_mut()[c * len + i] = Complex64::from_polar(v.norm(), phase);
        }
    }
    out
}

/// Random point of the 2n-point grid (n = `base_n`), independent of the
/// grid the sample is later evaluated on.
fn grid_point<R: Rng>(dim: usize, base_n: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| 2.0 * PI * rng.random_range(0..2 * base_n) as f64 / (2 * base_n) as f64).collect()
}

// ---------------------------------------------------------------- Nikol'skij

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NikolskijConfig {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub samples: usize,
    pub blocks: Vec<usize>,
    /// Blocks m <= this are also evaluated on the doubled grid.
    pub refine_upto: Option<usize>,
    pub seed: u64,
    pub jobs: usize,
    pub slope_tol: f64,
    pub refine_tol: f64,
}

impl Default for NikolskijConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            p: 2.0,
            q: f64::INFINITY,
            samples: 100,
            blocks: vec![1, 2, 3, 4],
            refine_upto: Some(3),
            seed: 0,
            jobs: 0,
            slope_tol: 0.1,
            refine_tol: 0.05,
        }
    }
}

/// Smallest grid resolving block m.
pub fn block_grid_n(m: usize) -> usize {
    (1usize << (m + 2)).max(8)
}

/// Diameter of the ball containing the support of φ_m.
pub fn block_diameter(m: usize) -> f64 {
    (1u64 << (m + 2)) as f64
}

/// Random field supported in block m: coefficients φ_m(k)·r_k·e^{iθ_k} with
/// r_k ∈ [0.5, 1.5]. Coherent samples align all phases at a grid point.
pub fn block_sample<R: Rng>(grid: TorusGrid, m: usize, coherent: bool, rng: &mut R) -> SpectralField {
    let dim = grid.dim();
    let band = (1i64 << (m + 1)) - 1;
    assert!((band as usize) < grid.n() / 2, "grid too coarse for block {m}");
    let x0 = grid_point(dim, block_grid_n(m), rng);
    let mut f = SpectralField::zeros(grid, 1);
    for k in half_box(dim, band) {
        let r: f64 = rng.random_range(0.5..1.5);
        let theta: f64 = rng.random_range(0.0..2.0 * PI);
        let w = phi(m, radius(&k));
        if w == 0.0 {
            continue;
        }
        if k.iter().all(|&x| x == 0) {
            f.set_coeff(&k, 0, Complex64::new(w * r, 0.0));
            continue;
        }
        let phase = if coherent {
            -k.iter().zip(&x0).map(|(&ki, xi)| ki as f64 * xi).sum::<f64>()
        } else {
            theta
        };
        let c = Complex64::from_polar(w * r, phase);
        f.set_coeff(&k, 0, c);
        let neg: Vec<i64> = k.iter().map(|&x| -x).collect();
        f.set_coeff(&neg, 0, c.conj());
    }
    f
}

/// ‖f‖_q / (d_Λ^{d/p − d/q} ‖f‖_p).
pub fn nikolskij_ratio(f: &SpectralField, p: f64, q: f64, d_lambda: f64) -> Result<f64> {
    let d = f.grid().dim() as f64;
    let expo = d / p - if q.is_infinite() { 0.0 } else { d / q };
    Ok(f.lp_norm(q)? / (d_lambda.powf(expo) * f.lp_norm(p)?))
}

pub fn certify_nikolskij(cfg: &NikolskijConfig) -> Result<CertificateReport> {
    if !(cfg.p >= 1.0) || !(cfg.q >= cfg.p) {
        return Err(Error::Param(format!("Nikol'skij needs q >= p >= 1 (p = {}, q = {})", cfg.p, cfg.q)));
    }
    if cfg.blocks.is_empty() || cfg.samples == 0 {
        return Err(Error::Param("Nikol'skij needs at least one block and one sample".into()));
    }
    let mut profile = Vec::new();
    let mut change: Option<f64> = None;
    for &m in &cfg.blocks {
        let base = TorusGrid::new(cfg.dim, block_grid_n(m))?;
        let refine = cfg.refine_upto.is_some_and(|r| m <= r);
        let ratios: Vec<Result<(f64, f64)>> = par_map(cfg.samples, cfg.jobs, |i| {
            let stream = ((m as u64) << 32) | i as u64;
            let coherent = i % 2 == 0;
            let f = block_sample(base, m, coherent, &mut rng_for(cfg.seed, stream));
            let r0 = nikolskij_ratio(&f, cfg.p, cfg.q, block_diameter(m))?;
            let r1 = if refine {
                let fine = block_sample(base.refined(2), m, coherent, &mut rng_for(cfg.seed, stream));
                nikolskij_ratio(&fine, cfg.p, cfg.q, block_diameter(m))?
            } else {
                r0
            };
            Ok((r0, r1))
        });
        let ratios: Vec<(f64, f64)> = ratios.into_iter().collect::<Result<_>>()?;
        let max0 = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
        let max1 = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
        if refine {
            let c = rel_change(max0, max1);
            change = Some(change.map_or(c, |x: f64| x.max(c)));
        }
        profile.push(max0);
    }
    let xs: Vec<f64> = cfg.blocks.iter().map(|&m| m as f64).collect();
    let ys: Vec<f64> = profile.iter().map(|v| v.ln()).collect();
    let slope = linear_fit(&xs, &ys).0;
    let empirical_max = profile.iter().copied().fold(0.0, f64::max);
    let pass = empirical_max.is_finite()
        && slope.abs() <= cfg.slope_tol
        && change.is_none_or(|c| c <= cfg.refine_tol);
    Ok(CertificateReport {
        inequality: "nikolskij".into(),
        params: params(&[("dim", cfg.dim as f64), ("p", cfg.p), ("q", cfg.q)]),
        samples: cfg.samples,
        seed: cfg.seed,
        empirical_max,
        trend_slope: Some(slope),
        pass,
        refinement_change: change,
        profile,
        skipped: 0,
    })
}

// ----------------------------------------------------------------- embedding

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub p: f64,
    pub n: usize,
    pub band: i64,
    pub decay: f64,
    pub samples: usize,
    pub seed: u64,
    pub jobs: usize,
    pub refine: bool,
    pub refine_tol: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { dim: 3, p: 3.0, n: 12, band: 4, decay: 1.0, samples: 200, seed: 0, jobs: 0, refine: true, refine_tol: 0.05 }
    }
}

/// ‖u‖_∞ / ‖u‖_{B^{d/p}_{p,1}}.
pub fn embedding_ratio(u: &SpectralField, p: f64) -> Result<f64> {
    let d = u.grid().dim() as f64;
    Ok(u.lp_norm(f64::INFINITY)? / besov_norm(u, BesovIndex::new(d / p, p, 1.0)?)?)
}

fn random_sample(grid: TorusGrid, base_n: usize, band: i64, decay: f64, mean_zero: bool, coherent: bool, seed: u64, stream: u64) -> SpectralField {
    let mut rng = rng_for(seed, stream);
    let u = random_trig_polynomial(grid, 1, band, decay, mean_zero, &mut rng);
    let x0 = grid_point(grid.dim(), base_n, &mut rng);
    if coherent {
        cohere(&u, &x0)
    } else {
        u
    }
}

pub fn certify_embedding(cfg: &EmbeddingConfig) -> Result<CertificateReport> {
    if !(cfg.p >= 1.0) || cfg.samples == 0 {
        return Err(Error::Param("embedding needs p >= 1 and at least one sample".into()));
    }
    let base = TorusGrid::new(cfg.dim, cfg.n)?;
    let ratios: Vec<Result<(f64, f64)>> = par_map(cfg.samples, cfg.jobs, |i| {
        let coherent = i % 2 == 1;
        let u = random_sample(base, cfg.n, cfg.band, cfg.decay, false, coherent, cfg.seed, i as u64);
        let r0 = embedding_ratio(&u, cfg.p)?;
        let r1 = if cfg.refine {
            let v = random_sample(base.refined(2), cfg.n, cfg.band, cfg.decay, false, coherent, cfg.seed, i as u64);
            embedding_ratio(&v, cfg.p)?
        } else {
            r0
        };
        Ok((r0, r1))
    });
    let ratios: Vec<(f64, f64)> = ratios.into_iter().collect::<Result<_>>()?;
    let max0 = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let max1 = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let change = cfg.refine.then(|| rel_change(max0, max1));
    Ok(CertificateReport {
        inequality: "embedding".into(),
        params: params(&[("dim", cfg.dim as f64), ("p", cfg.p), ("n", cfg.n as f64), ("band", cfg.band as f64)]),
        samples: cfg.samples,
        seed: cfg.seed,
        empirical_max: max0,
        trend_slope: None,
        pass: max0.is_finite() && change.is_none_or(|c| c <= cfg.refine_tol),
        refinement_change: change,
        profile: if cfg.refine { vec![max0, max1] } else { vec![max0] },
        skipped: 0,
    })
}

// --------------------------------------------------------------- product law

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProductLawConfig {
    pub dim: usize,
    pub p: f64,
    /// Defaults to d/p.
    pub s: Option<f64>,
    pub n: usize,
    pub band: i64,
    pub decay: f64,
    pub samples: usize,
    pub seed: u64,
    pub jobs: usize,
    pub refine: bool,
    pub refine_tol: f64,
}

impl Default for ProductLawConfig {
    fn default() -> Self {
        Self { dim: 3, p: 2.5, s: None, n: 18, band: 3, decay: 1.0, samples: 100, seed: 0, jobs: 0, refine: true, refine_tol: 0.05 }
    }
}

/// ‖fg‖_{B^s_{p,1}} / (‖f‖_{B^{d/p}_{p,1}} ‖g‖_{B^s_{p,1}}); zero when fg = 0.
pub fn product_ratio(f: &SpectralField, g: &SpectralField, p: f64, s: f64) -> Result<f64> {
    let d = f.grid().dim() as f64;
    let num = besov_norm(&f.product(g)?, BesovIndex::new(s, p, 1.0)?)?;
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = besov_norm(f, BesovIndex::new(d / p, p, 1.0)?)? * besov_norm(g, BesovIndex::new(s, p, 1.0)?)?;
    Ok(num / den)
}

pub fn check_product_window(dim: usize, p: f64, s: f64) -> Result<()> {
    let d = dim as f64;
    if !(p >= 2.0 && p < d) {
        return Err(Error::Param(format!("product law needs 2 <= p < d (p = {p}, d = {dim})")));
    }
    if !(s > 0.0 && s <= d / p) {
        return Err(Error::Param(format!("product law needs 0 < s <= d/p (s = {s})")));
    }
    Ok(())
}

pub fn certify_product_law(cfg: &ProductLawConfig) -> Result<CertificateReport> {
    let s = cfg.s.unwrap_or(cfg.dim as f64 / cfg.p);
    check_product_window(cfg.dim, cfg.p, s)?;
    if cfg.samples == 0 {
        return Err(Error::Param("product law needs at least one sample".into()));
    }
    let base = TorusGrid::new(cfg.dim, cfg.n)?;
    let pair = |grid: TorusGrid, i: usize| {
        let f = random_sample(grid, cfg.n, cfg.band, cfg.decay, false, i % 2 == 1, cfg.seed, 2 * i as u64);
        let g = random_sample(grid, cfg.n, cfg.band, cfg.decay, false, i % 2 == 1, cfg.seed, 2 * i as u64 + 1);
        (f, g)
    };
    let ratios: Vec<Result<(f64, f64)>> = par_map(cfg.samples, cfg.jobs, |i| {
        let (f, g) = pair(base, i);
        let r0 = product_ratio(&f, &g, cfg.p, s)?;
        let r1 = if cfg.refine {
            let (f, g) = pair(base.refined(2), i);
            product_ratio(&f, &g, cfg.p, s)?
        } else {
            r0
        };
        Ok((r0, r1))
    });
    let ratios: Vec<(f64, f64)> = ratios.into_iter().collect::<Result<_>>()?;
    let max0 = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let max1 = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let change = cfg.refine.then(|| rel_change(max0, max1));
    Ok(CertificateReport {
        inequality: "product_law".into(),
        params: params(&[("dim", cfg.dim as f64), ("p", cfg.p), ("s", s), ("n", cfg.n as f64), ("band", cfg.band as f64)]),
        samples: cfg.samples,
        seed: cfg.seed,
        empirical_max: max0,
        trend_slope: None,
        pass: max0.is_finite() && change.is_none_or(|c| c <= cfg.refine_tol),
        refinement_change: change,
        profile: if cfg.refine { vec![max0, max1] } else { vec![max0] },
        skipped: 0,
    })
}

// ------------------------------------------------------ maximal regularity

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaxRegularityConfig {
    pub dim: usize,
    pub n: usize,
    pub band: i64,
    pub s: f64,
    pub p: f64,
    pub horizon: f64,
    /// Simpson intervals on the base time grid (even).
    pub intervals: usize,
    /// Number of exponential envelopes per forcing.
    pub terms: usize,
    pub samples: usize,
    pub seed: u64,
    pub jobs: usize,
    pub refine: bool,
    pub refine_tol: f64,
}

impl Default for MaxRegularityConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            n: 8,
            band: 3,
            s: 0.0,
            p: 2.0,
            horizon: 20.0,
            intervals: 1024,
            terms: 3,
            samples: 100,
            seed: 0,
            jobs: 0,
            refine: true,
            refine_tol: 0.02,
        }
    }
}

/// ∫₀ᵗ e^{−κ(t−τ)} e^{−βτ} dτ, evaluated without overflow.
fn duhamel_exp(beta: f64, kappa: f64, t: f64) -> f64 {
    let slow = beta.min(kappa);
    (-slow * t).exp() * t * phi1_real(-(kappa - beta).abs() * t)
}

/// For g(t) = Σ_j e^{−β_j t} G_j (each G_j mean-zero), solves f_t − Δf = g,
/// f(0) = 0 exactly per mode and returns
/// (‖f_t‖_{L¹B^s_{p,1}} + ‖f‖_{L¹B^{s+2}_{p,1}}) / ‖g‖_{L¹B^s_{p,1}}
/// with Simpson quadrature on [0, horizon]. `None` when g = 0.
pub fn max_regularity_ratio(
    terms: &[(f64, SpectralField)],
    s: f64,
    p: f64,
    horizon: f64,
    intervals: usize,
) -> Result<Option<f64>> {
    let Some((_, first)) = terms.first() else {
        return Ok(None);
    };
    let grid = first.grid();
    let comps = first.comps();
    let len = grid.len();
    for (_, gj) in terms {
        if gj.grid() != grid || gj.comps() != comps {
            return Err(Error::GridMismatch);
        }
        let scale = gj.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if gj.mean().iter().any(|m| m.abs() > 1e-13 * scale.max(1e-300)) {
            return Err(Error::Param("maximal regularity forcing must be mean-zero".into()));
        }
    }
    let ks = grid.wavevectors();
    let k2 = grid.k_squared();
    let active: Vec<usize> = (0..len)
        .filter(|&f| terms.iter().any(|(_, gj)| (0..comps).any(|c| gj.coeffs()[c * len + f].norm() > 0.0)))
        .collect();
    if active.is_empty() {
        return Ok(None);
    }
    let max_block = grid.max_block();
    let weights: Vec<Vec<f64>> = active.iter().map(|&f| (0..=max_block).map(|m| phi(m, radius(&ks[f]))).collect()).collect();
    let vol = grid.volume();
    let besov = |coeffs: &[Vec<Complex64>], reg: f64| -> Result<f64> {
        if p == 2.0 {
            let mut acc = 0.0;
            for m in 0..=max_block {
                let e: f64 = active
                    .iter()
                    .enumerate()
                    .map(|(j, _)| weights[j][m].powi(2) * coeffs[j].iter().map(|c| c.norm_sqr()).sum::<f64>())
                    .sum();
                acc += 2f64.powf(reg * m as f64) * (vol * e).sqrt();
            }
            Ok(acc)
        } else {
            let mut field = SpectralField::zeros(grid, comps);
            for (j, &f) in active.iter().enumerate() {
                for c in 0..comps {
                    field.coeffs_mut()[c * len + f] = coeffs[j][c];
                }
            }
            besov_norm(&field, BesovIndex::new(reg, p, 1.0)?)
        }
    };
    let h = horizon / intervals as f64;
    let w = simpson_weights(intervals, h);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    for (i, wi) in w.iter().enumerate() {
        let t = i as f64 * h;
        let mut fk = vec![vec![zero; comps]; active.len()];
        let mut gk = vec![vec![zero; comps]; active.len()];
        for (j, &f) in active.iter().enumerate() {
            for (beta, gj) in terms {
                let e = (-beta * t).exp();
                let dh = duhamel_exp(*beta, k2[f], t);
                for c in 0..comps {
                    let coef = gj.coeffs()[c * len + f];
                    gk[j][c] += coef * e;
                    fk[j][c] += coef * dh;
                }
            }
        }
        let ft: Vec<Vec<Complex64>> = (0..active.len())
            .map(|j| (0..comps).map(|c| gk[j][c] - fk[j][c] * k2[active[j]]).collect())
            .collect();
        lhs += wi * (besov(&ft, s)? + besov(&fk, s + 2.0)?);
        rhs += wi * besov(&gk, s)?;
    }
    if rhs == 0.0 {
        return Ok(None);
    }
    Ok(Some(lhs / rhs))
}

fn max_reg_forcing(grid: TorusGrid, cfg: &MaxRegularityConfig, i: usize) -> Vec<(f64, SpectralField)> {
    let mut rng = rng_for(cfg.seed, i as u64);
    (0..cfg.terms)
        .map(|_| {
            let beta: f64 = rng.random_range(0.3..2.0);
            (beta, random_trig_polynomial(grid, 1, cfg.band, 1.0, true, &mut rng))
        })
        .collect()
}

pub fn certify_max_regularity(cfg: &MaxRegularityConfig) -> Result<CertificateReport> {
    if cfg.samples == 0 || cfg.intervals < 2 || cfg.intervals % 2 != 0 || !(cfg.horizon > 0.0) {
        return Err(Error::Param("maximal regularity needs samples > 0, an even interval count and horizon > 0".into()));
    }
    let grid = TorusGrid::new(cfg.dim, cfg.n)?;
    let ratios: Vec<Result<Option<(f64, f64)>>> = par_map(cfg.samples, cfg.jobs, |i| {
        let terms = max_reg_forcing(grid, cfg, i);
        let Some(r0) = max_regularity_ratio(&terms, cfg.s, cfg.p, cfg.horizon, cfg.intervals)? else {
            return Ok(None);
        };
        let r1 = if cfg.refine {
            max_regularity_ratio(&terms, cfg.s, cfg.p, cfg.horizon, 2 * cfg.intervals)?.unwrap_or(r0)
        } else {
            r0
        };
        Ok(Some((r0, r1)))
    });
    let ratios: Vec<Option<(f64, f64)>> = ratios.into_iter().collect::<Result<_>>()?;
    let skipped = ratios.iter().filter(|r| r.is_none()).count();
    let ok: Vec<(f64, f64)> = ratios.into_iter().flatten().collect();
    let max0 = ok.iter().map(|r| r.0).fold(0.0, f64::max);
    let max1 = ok.iter().map(|r| r.1).fold(0.0, f64::max);
    let change = (cfg.refine && !ok.is_empty()).then(|| rel_change(max0, max1));
    Ok(CertificateReport {
        inequality: "max_regularity".into(),
        params: params(&[
            ("dim", cfg.dim as f64),
            ("p", cfg.p),
            ("s", cfg.s),
            ("horizon", cfg.horizon),
            ("intervals", cfg.intervals as f64),
        ]),
        samples: cfg.samples,
        seed: cfg.seed,
        empirical_max: max0,
        trend_slope: None,
        pass: !ok.is_empty() && max0.is_finite() && change.is_none_or(|c| c <= cfg.refine_tol),
        refinement_change: change,
        profile: if cfg.refine { vec![max0, max1] } else { vec![max0] },
        skipped,
    })
}

// ------------------------------------------------------------ diffeomorphism

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffeoRatios {
    /// ‖f∘Z‖ / ‖f‖
    pub forward: f64,
    /// ‖f∘Z^{-1}‖ / ‖f‖
    pub inverse: f64,
    pub grad_disp_sup: f64,
    pub min_jacobian: f64,
}

/// Compares ‖f∘Z‖_{B^s_{p,1}} and ‖f∘Z^{-1}‖_{B^s_{p,1}} with ‖f‖_{B^s_{p,1}}
/// for Z = id + disp.
pub fn certify_diffeo_invariance(f: &SpectralField, disp: &SpectralField, s: f64, p: f64) -> Result<DiffeoRatios> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Param(format!("diffeomorphism invariance needs 0 < s < 1 (s = {s})")));
    }
    if f.grid() != disp.grid() {
        return Err(Error::GridMismatch);
    }
    let min_jacobian = map::check_diffeomorphism(disp)?;
    let idx = BesovIndex::new(s, p, 1.0)?;
    let base = besov_norm(f, idx)?;
    let fwd = map::compose(f, &map::forward_points(disp))?;
    let inv = map::compose(f, &map::inverse_points(disp, 1e-12)?)?;
    Ok(DiffeoRatios {
        forward: besov_norm(&fwd, idx)? / base,
        inverse: besov_norm(&inv, idx)? / base,
        grad_disp_sup: map::gradient_sup(disp)?,
        min_jacobian,
    })
}
