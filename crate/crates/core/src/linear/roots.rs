use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Band on |ν²|k|⁴ − 4| inside which the double-root formula is used.
pub const RESONANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Generic,
    Resonant,
}

/// Roots of λ² + ν|k|²λ + 1 = 0 for a fixed wavevector, with the
/// coefficients of the homogeneous solution for data d(0), d'(0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub k: Vec<i64>,
    pub nu: f64,
    pub k2: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// Coefficient of e^{λ₊t} (generic) or e^{λt} (resonant).
    pub a_k: Complex64,
    /// Coefficient of e^{λ₋t} (generic) or t·e^{λt} (resonant).
    pub b_k: Complex64,
    pub branch: Branch,
    pub d0: Complex64,
    pub dt0: Complex64,
}

pub fn characteristic_roots(k: &[i64], nu: f64) -> Result<(Complex64, Complex64, Branch)> {
    let k2: f64 = k.iter().map(|&x| (x * x) as f64).sum();
    if k2 == 0.0 {
        return Err(Error::ZeroMode);
    }
    if !(nu > 0.0) {
        return Err(Error::Param(format!("viscosity must be positive, got {nu}")));
    }
    Ok(roots_for(nu * k2))
}

/// Roots of λ² + bλ + 1 with b = ν|k|² > 0. λ₋ is the fast root and
/// λ₊ = 1/λ₋, so λ₊λ₋ = 1 without cancellation.
pub fn roots_for(b: f64) -> (Complex64, Complex64, Branch) {
    let disc = b * b - 4.0;
    if disc.abs() < RESONANCE_TOL {
        let l = Complex64::new(-b / 2.0, 0.0);
        return (l, l, Branch::Resonant);
    }
    let minus = if disc > 0.0 {
        Complex64::new((-b - disc.sqrt()) / 2.0, 0.0)
    } else {
        Complex64::new(-b / 2.0, -(-disc).sqrt() / 2.0)
    };
    (minus.inv(), minus, Branch::Generic)
}

impl ModeSolution {
    pub fn new(k: &[i64], nu: f64) -> Result<Self> {
        let (lp, lm, branch) = characteristic_roots(k, nu)?;
        let zero = Complex64::new(0.0, 0.0);
        Ok(Self {
            k: k.to_vec(),
            nu,
            k2: k.iter().map(|&x| (x * x) as f64).sum(),
            lambda_plus: lp,
            lambda_minus: lm,
            a_k: zero,
            b_k: zero,
            branch,
            d0: zero,
            dt0: zero,
        })
    }

    /// Fix the data d(0) = d0, d'(0) = dt0 and the matching coefficients.
    pub fn with_data(mut self, dt0: Complex64, d0: Complex64) -> Self {
        self.d0 = d0;
        self.dt0 = dt0;
        match self.branch {
            Branch::Generic => {
                self.a_k = (dt0 - self.lambda_minus * d0) / (self.lambda_plus - self.lambda_minus);
                self.b_k = d0 - self.a_k;
            }
            Branch::Resonant => {
                self.a_k = d0;
                self.b_k = dt0 - self.lambda_plus * d0;
            }
        }
        self
    }

    /// (e^{λ₊t} − e^{λ₋t})/(λ₊ − λ₋), continuous through resonance.
    pub fn kernel(&self, t: f64) -> Complex64 {
        crate::expint::exp_divided_difference(self.lambda_plus, self.lambda_minus, t)
    }

    /// Homogeneous (d, d') at time t from the stored data.
    pub fn state_at(&self, t: f64) -> (Complex64, Complex64) {
        let lm = self.lambda_minus;
        let em = (lm * t).exp();
        let c = self.dt0 - lm * self.d0;
        let kern = self.kernel(t);
        let d = self.d0 * em + c * kern;
        let dd = lm * self.d0 * em + c * (em + self.lambda_plus * kern);
        (d, dd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub k: Vec<i64>,
    pub k2: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub nu: f64,
    pub kmax: i64,
    pub dim: usize,
    pub rows: Vec<SpectrumRow>,
    /// min |λ₊ − λ₋|/|k|² over generic modes.
    pub min_separation: f64,
    pub resonant_modes: usize,
    /// max |ν|Re λ₊|·|k|² − 1| over |k|² >= 25 (None if no such mode).
    pub asymptotic_deviation: Option<f64>,
    /// Least-squares slope of ln|Re λ₊| against ln|k|² over |k|² >= 25.
    pub asymptotic_slope: Option<f64>,
    pub min_re_lambda_plus: f64,
    pub argmin_k2: f64,
    pub max_vieta_residual: f64,
}

/// Tabulate the roots over 0 < |k|_∞ <= kmax in dimension `dim`.
pub fn spectrum_report(nu: f64, kmax: i64, dim: usize) -> Result<SpectrumTable> {
    if kmax < 1 {
        return Err(Error::Param(format!("kmax must be >= 1, got {kmax}")));
    }
    if dim < 1 {
        return Err(Error::Param("dimension must be >= 1".into()));
    }
    let side = (2 * kmax + 1) as usize;
    let mut rows = Vec::new();
    for mut f in 0..side.pow(dim as u32) {
        let mut k = vec![0i64; dim];
        for a in (0..dim).rev() {
            k[a] = (f % side) as i64 - kmax;
            f /= side;
        }
        if k.iter().all(|&x| x == 0) {
            continue;
        }
        let (lp, lm, branch) = characteristic_roots(&k, nu)?;
        let k2 = k.iter().map(|&x| (x * x) as f64).sum();
        rows.push(SpectrumRow { k, k2, lambda_plus: lp, lambda_minus: lm, branch });
    }
    let mut min_sep = f64::INFINITY;
    let mut resonant = 0;
    let mut dev: Option<f64> = None;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let (mut min_re, mut argmin) = (f64::INFINITY, 0.0);
    let mut vieta = 0.0f64;
    for r in &rows {
        match r.branch {
            Branch::Resonant => resonant += 1,
            Branch::Generic => {
                min_sep = min_sep.min((r.lambda_plus - r.lambda_minus).norm() / r.k2);
                vieta = vieta.max((r.lambda_plus * r.lambda_minus - 1.0).norm());
                vieta = vieta.max((r.lambda_plus + r.lambda_minus + nu * r.k2).norm());
            }
        }
        let re = r.lambda_plus.re.abs();
        if r.k2 >= 25.0 {
            let d = (nu * re * r.k2 - 1.0).abs();
            dev = Some(dev.map_or(d, |x| x.max(d)));
            xs.push(r.k2.ln());
            ys.push(re.ln());
        }
        if re < min_re {
            min_re = re;
            argmin = r.k2;
        }
    }
    let slope = (xs.len() >= 2).then(|| crate::stats::linear_fit(&xs, &ys).0);
    Ok(SpectrumTable {
        nu,
        kmax,
        dim,
        rows,
        min_separation: min_sep,
        resonant_modes: resonant,
        asymptotic_deviation: dev,
        asymptotic_slope: slope,
        min_re_lambda_plus: min_re,
        argmin_k2: argmin,
        max_vieta_residual: vieta,
    })
}

impl SpectrumTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let ks: Vec<String> = (1..=self.dim).map(|i| format!("k{i}")).collect();
        writeln!(w, "{},k_sq,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus,branch", ks.join(","))?;
        for r in &self.rows {
            let k: Vec<String> = r.k.iter().map(|x| x.to_string()).collect();
            let branch = match r.branch {
                Branch::Generic => "generic",
                Branch::Resonant => "resonant",
            };
            writeln!(
                w,
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                k.join(","),
                r.k2,
                r.lambda_plus.re,
                r.lambda_plus.im,
                r.lambda_minus.re,
                r.lambda_minus.im,
                branch
            )?;
        }
        Ok(())
    }
}
