//! Truncated Fourier representation of real fields on the torus.
//!
//! Convention: `u_k = (2π)^{-d} ∫ u(x) e^{-ik·x} dx`, `u(x) = Σ_k u_k e^{ik·x}`.
//! On the collocation grid this is the forward FFT divided by `n^d`.

use crate::error::{Error, Result};
use crate::fft::{fft_nd, forward_real_pair, inverse_real_pair};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use crate::grid::TorusGrid;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fourier coefficients of a real scalar (`comps == 1`) or vector field.
/// Storage is component-major; each component holds `grid.len()`
/// coefficients in row-major FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    comps: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, comps: usize) -> Self {
        assert!(comps >= 1);
        Self { grid, comps, coeffs: vec![ZERO; comps * grid.len()] }
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        let mut f = Self::zeros(grid, 1);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_coeffs(grid: TorusGrid, comps: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = comps * grid.len();
        if comps == 0 || coeffs.len() != expected {
            return Err(Error::Shape { expected, got: coeffs.len() });
        }
        Ok(Self { grid, comps, coeffs })
    }

    /// Forward transform of collocation values (component-major).
    pub fn from_values(grid: TorusGrid, comps: usize, values: &[f64]) -> Result<Self> {
        let len = grid.len();
        if comps == 0 || values.len() != comps * len {
            return Err(Error::Shape { expected: comps * len, got: values.len() });
        }
        let scale = 1.0 / len as f64;
        let (dim, n) = (grid.dim(), grid.n());
        let mut coeffs = Vec::with_capacity(comps * len);
        let chunks: Vec<&[f64]> = values.chunks(len).collect();
        for pair in chunks.chunks(2) {
            if let [a, b] = pair {
                let (fa, fb) = forward_real_pair(a, b, dim, n);
                coeffs.extend(fa.into_iter().map(|c| c * scale));
                coeffs.extend(fb.into_iter().map(|c| c * scale));
            } else {
                let mut z: Vec<Complex64> = pair[0].iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft_nd(&mut z, dim, n, true);
                coeffs.extend(z.into_iter().map(|c| c * scale));
            }
        }
        Ok(Self { grid, comps, coeffs })
    }

    /// Build a field by sampling a function at the collocation points.
    pub fn from_fn<F>(grid: TorusGrid, comps: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let len = grid.len();
        let mut values = vec![0.0; comps * len];
        for flat in 0..len {
            let v = f(&grid.point(flat));
            for c in 0..comps {
                values[c * len + flat] = v[c];
            }
        }
        Self::from_values(grid, comps, &values).expect("shape is consistent by construction")
    }

    pub fn scalar_from_fn<F: Fn(&[f64]) -> f64>(grid: TorusGrid, f: F) -> Self {
        Self::from_fn(grid, 1, |x| vec![f(x)])
    }

    /// Inverse transform to collocation values (component-major).
    pub fn to_values(&self) -> Vec<f64> {
        let len = self.grid.len();
        let (dim, n) = (self.grid.dim(), self.grid.n());
        let mut out = Vec::with_capacity(self.coeffs.len());
        let chunks: Vec<&[Complex64]> = self.coeffs.chunks(len).collect();
        for pair in chunks.chunks(2) {
            if let [a, b] = pair {
                let (va, vb) = inverse_real_pair(a, b, dim, n);
                out.extend(va);
                out.extend(vb);
            } else {
                let mut buf = pair[0].to_vec();
                fft_nd(&mut buf, dim, n, false);
                out.extend(buf.iter().map(|c| c.re));
            }
        }
        out
    }

    /// Values on a finer collocation grid with `m` points per axis (m >= n),
    /// obtained by zero padding. Nyquist coefficients are split evenly
    /// between ±n/2 so the result is the real trigonometric interpolant.
    pub fn values_on(&self, m: usize) -> Vec<f64> {
        if m == self.grid.n() {
            return self.to_values();
        }
        let fine = TorusGrid::new(self.grid.dim(), m).expect("refined grid is valid");
        let padded = self.padded_coeffs(m);
        let len = fine.len();
        let chunks: Vec<&[Complex64]> = padded.chunks(len).collect();
        let mut out = Vec::with_capacity(self.comps * len);
        for pair in chunks.chunks(2) {
            let (va, vb) = match pair {
                [a, b] => inverse_real_pair(a, b, fine.dim(), m),
                _ => inverse_real_pair(pair[0], &vec![ZERO; len], fine.dim(), m),
            };
            out.extend(va);
            if pair.len() == 2 {
                out.extend(vb);
            }
        }
        out
    }

    /// Coefficients zero-padded onto the grid with `m` points per axis,
    /// Nyquist coefficients split evenly between ±n/2.
    pub fn padded_coeffs(&self, m: usize) -> Vec<Complex64> {
        assert!(m > self.grid.n() && m % 2 == 0);
        let fine_len = m.pow(self.grid.dim() as u32);
        let len = self.grid.len();
        let map = pad_map(self.grid, m);
        let mut out = vec![ZERO; self.comps * fine_len];
        for c in 0..self.comps {
            let src = &self.coeffs[c * len..(c + 1) * len];
            let dst = &mut out[c * fine_len..(c + 1) * fine_len];
            for &(from, to, w) in map.iter() {
                dst[to] += src[from] * w;
            }
        }
        out
    }

    /// Evaluate the trigonometric interpolant at arbitrary points.
    /// Returns `comps` values per point, point-major.
    pub fn eval_at(&self, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let g = self.grid;
        let n = g.n();
        let len = g.len();
        let dim = g.dim();
        let mut idx = vec![0; dim];
        // active modes only
        let mut active: Vec<(Vec<usize>, Vec<Complex64>)> = Vec::new();
        for flat in 0..len {
            let cs: Vec<Complex64> = (0..self.comps).map(|c| self.coeffs[c * len + flat]).collect();
            if cs.iter().any(|c| *c != ZERO) {
                g.unravel(flat, &mut idx);
                active.push((idx.clone(), cs));
            }
        }
        let eval_one = |x: &Vec<f64>, basis: &mut Vec<Vec<Complex64>>| {
            for a in 0..dim {
                for i in 0..n {
                    let k = g.wavenumber(i);
                    basis[a][i] = if i == n / 2 {
                        Complex64::new((k as f64 * x[a]).cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, k as f64 * x[a])
                    };
                }
            }
            let mut acc = vec![0.0; self.comps];
            for (ix, cs) in &active {
                let mut e = basis[0][ix[0]];
                for a in 1..dim {
                    e *= basis[a][ix[a]];
                }
                for (c, coef) in cs.iter().enumerate() {
                    acc[c] += (coef * e).re;
                }
            }
            acc
        };
        const CHUNK: usize = 64;
        let chunks = points.len().div_ceil(CHUNK);
        let work = active.len() * points.len();
        let jobs = if work < 1 << 16 { 1 } else { 0 };
        crate::par::par_map(chunks, jobs, |c| {
            let mut basis = vec![vec![ZERO; n]; dim];
            points[c * CHUNK..((c + 1) * CHUNK).min(points.len())]
                .iter()
                .map(|x| eval_one(x, &mut basis))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> SpectralField {
        let len = self.grid.len();
        Self { grid: self.grid, comps: 1, coeffs: self.coeffs[c * len..(c + 1) * len].to_vec() }
    }

    pub fn component_slice(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn from_components(parts: &[SpectralField]) -> Result<Self> {
        let first = parts.first().ok_or(Error::GridMismatch)?;
        let mut coeffs = Vec::with_capacity(parts.len() * first.grid.len());
        for p in parts {
            if p.grid != first.grid || p.comps != 1 {
                return Err(Error::GridMismatch);
            }
            coeffs.extend_from_slice(&p.coeffs);
        }
        Ok(Self { grid: first.grid, comps: parts.len(), coeffs })
    }

    pub fn coeff(&self, k: &[i64], comp: usize) -> Complex64 {
        match self.grid.flat_of(k) {
            Some(f) => self.coeffs[comp * self.grid.len() + f],
            None => ZERO,
        }
    }

    pub fn set_coeff(&mut self, k: &[i64], comp: usize, value: Complex64) {
        let f = self.grid.flat_of(k).expect("wavevector not retained");
        let len = self.grid.len();
        self.coeffs[comp * len + f] = value;
    }

    /// Spatial mean of each component (the k = 0 coefficient).
    pub fn mean(&self) -> Vec<f64> {
        let len = self.grid.len();
        (0..self.comps).map(|c| self.coeffs[c * len].re).collect()
    }

    pub fn mean_scalar(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Copy with each component's mean removed.
    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        let len = self.grid.len();
        for c in 0..self.comps {
            out.coeffs[c * len] = ZERO;
        }
        out
    }

    pub fn integral(&self) -> Vec<f64> {
        let vol = self.grid.volume();
        self.mean().into_iter().map(|m| m * vol).collect()
    }

    /// Largest |c_k - conj(c_{-k})| over all coefficients.
    pub fn hermitian_defect(&self) -> f64 {
        let len = self.grid.len();
        let mut worst = 0.0f64;
        for c in 0..self.comps {
            let base = c * len;
            for f in 0..len {
                let g = self.grid.conjugate_flat(f);
                worst = worst.max((self.coeffs[base + f] - self.coeffs[base + g].conj()).norm());
            }
        }
        worst
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.comps != other.comps {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { coeffs, ..*self })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { coeffs, ..*self })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect(), ..*self }
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn add_constant(&self, value: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    /// Largest coefficient-wise |a - b|.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Sum over components and modes of |c_k|².
    pub fn energy_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Multiply every coefficient by `m(k)`; same multiplier on every component.
    pub fn map_modes<F: Fn(&[i64]) -> Complex64>(&self, m: F) -> Self {
        let len = self.grid.len();
        let ks = self.grid.wavevectors();
        let mult: Vec<Complex64> = ks.iter().map(|k| m(k)).collect();
        let mut out = self.clone();
        for c in 0..self.comps {
            for f in 0..len {
                out.coeffs[c * len + f] *= mult[f];
            }
        }
        out
    }

    /// ∂/∂x_axis applied to every component. The Nyquist mode along the
    /// differentiated axis is zeroed so derivatives of real fields stay real.
    pub fn derivative(&self, axis: usize) -> Result<Self> {
        let g = self.grid;
        if axis >= g.dim() {
            return Err(Error::Axis { axis, dim: g.dim() });
        }
        let n = g.n();
        let stride = n.pow((g.dim() - 1 - axis) as u32);
        let len = g.len();
        let mut out = self.clone();
        for c in 0..self.comps {
            for f in 0..len {
                let i = (f / stride) % n;
                let k = if i == n / 2 { 0.0 } else { g.wavenumber(i) as f64 };
                out.coeffs[c * len + f] *= Complex64::new(0.0, k);
            }
        }
        Ok(out)
    }

    /// Gradient of a scalar field (d components).
    pub fn gradient(&self) -> Result<Self> {
        if self.comps != 1 {
            return Err(Error::Param("gradient needs a scalar field".into()));
        }
        let parts: Result<Vec<_>> = (0..self.grid.dim()).map(|a| self.derivative(a)).collect();
        Self::from_components(&parts?)
    }

    /// Jacobian of a field with c components: component a*d + b is ∂_b u_a.
    pub fn jacobian(&self) -> Result<Self> {
        let d = self.grid.dim();
        let mut parts = Vec::with_capacity(self.comps * d);
        for a in 0..self.comps {
            let ua = self.component(a);
            for b in 0..d {
                parts.push(ua.derivative(b)?);
            }
        }
        Self::from_components(&parts)
    }

    /// Divergence of a vector field with d components.
    pub fn divergence(&self) -> Result<Self> {
        let d = self.grid.dim();
        if self.comps != d {
            return Err(Error::Param(format!("divergence needs {d} components, got {}", self.comps)));
        }
        let mut out = Self::zeros(self.grid, 1);
        for a in 0..d {
            let da = self.component(a).derivative(a)?;
            out.axpy(1.0, &da)?;
        }
        Ok(out)
    }

    /// Laplacian, coefficient-wise multiplication by -|k|².
    pub fn laplacian(&self) -> Self {
        let k2 = self.grid.k_squared();
        let len = self.grid.len();
        let mut out = self.clone();
        for c in 0..self.comps {
            for f in 0..len {
                out.coeffs[c * len + f] *= -k2[f];
            }
        }
        out
    }

    /// Mean-zero inverse of -Δ applied componentwise: Ψ_k = f_k/|k|², Ψ_0 = 0.
    pub fn poisson_inverse(&self) -> Self {
        let k2 = self.grid.k_squared();
        let len = self.grid.len();
        let mut out = self.clone();
        for c in 0..self.comps {
            out.coeffs[c * len] = ZERO;
            for f in 1..len {
                out.coeffs[c * len + f] /= k2[f];
            }
        }
        out
    }

    /// Zero every mode with some |k_i| > n/3.
    pub fn dealiased(&self) -> Self {
        let mask = self.grid.dealias_mask();
        let len = self.grid.len();
        let mut out = self.clone();
        for c in 0..self.comps {
            for f in 0..len {
                if !mask[f] {
                    out.coeffs[c * len + f] = ZERO;
                }
            }
        }
        out
    }

    /// Pointwise product with 2/3-rule dealiasing before and after the
    /// multiplication. Either factor may be scalar (broadcast over the
    /// other's components); otherwise components multiply pairwise.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let comps = match (self.comps, other.comps) {
            (a, b) if a == b => a,
            (1, b) => b,
            (a, 1) => a,
            _ => return Err(Error::GridMismatch),
        };
        let len = self.grid.len();
        let va = self.dealiased().to_values();
        let vb = other.dealiased().to_values();
        let mut out = vec![0.0; comps * len];
        for c in 0..comps {
            let ca = if self.comps == 1 { 0 } else { c };
            let cb = if other.comps == 1 { 0 } else { c };
            for f in 0..len {
                out[c * len + f] = va[ca * len + f] * vb[cb * len + f];
            }
        }
        Ok(Self::from_values(self.grid, comps, &out)?.dealiased())
    }

    /// Dealiased dot product of two vector fields.
    pub fn dot(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let prod = self.product(other)?;
        let mut out = Self::zeros(self.grid, 1);
        for c in 0..self.comps {
            out.axpy(1.0, &prod.component(c))?;
        }
        Ok(out)
    }

    /// L^p norm of the pointwise Euclidean magnitude. p = 2 uses Parseval;
    /// other p use a rectangle rule on the 2x oversampled grid;
    /// `f64::INFINITY` is the maximum on that grid.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Param(format!("L^p norm needs p >= 1, got {p}")));
        }
        if p == 2.0 {
            return Ok((self.grid.volume() * self.energy_sum()).sqrt());
        }
        let m = 2 * self.grid.n();
        let values = self.values_on(m);
        let pts = values.len() / self.comps;
        let mag = (0..pts).map(|i| {
            (0..self.comps).map(|c| values[c * pts + i].powi(2)).sum::<f64>().sqrt()
        });
        if p.is_infinite() {
            return Ok(mag.fold(0.0, f64::max));
        }
        let cell = self.grid.volume() / pts as f64;
        Ok((cell * mag.map(|v| v.powf(p)).sum::<f64>()).powf(1.0 / p))
    }

    /// Max over the collocation grid of the pointwise magnitude.
    pub fn max_abs_on_grid(&self) -> f64 {
        let v = self.to_values();
        let len = self.grid.len();
        (0..len)
            .map(|i| (0..self.comps).map(|c| v[c * len + i].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// (coarse index, fine index, weight) triples for zero padding onto m^d.
fn pad_map(g: TorusGrid, m: usize) -> Arc<Vec<(usize, usize, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<(TorusGrid, usize), Arc<Vec<(usize, usize, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("padding cache poisoned");
    map.entry((g, m))
        .or_insert_with(|| {
            let fine = TorusGrid::new(g.dim(), m).expect("refined grid is valid");
            let half = (g.n() / 2) as i64;
            let mut out = Vec::new();
            let mut idx = vec![0; g.dim()];
            for flat in 0..g.len() {
                g.unravel(flat, &mut idx);
                let k: Vec<i64> = idx.iter().map(|&i| g.wavenumber(i)).collect();
                let nyq: Vec<usize> = (0..k.len()).filter(|&a| k[a] == half).collect();
                let weight = 0.5f64.powi(nyq.len() as i32);
                for mask in 0..(1usize << nyq.len()) {
                    let mut kk = k.clone();
                    for (b, &a) in nyq.iter().enumerate() {
                        if mask & (1 << b) != 0 {
                            kk[a] = -half;
                        }
                    }
                    out.push((flat, fine.flat_of(&kk).expect("fine grid retains coarse modes"), weight));
                }
            }
            Arc::new(out)
        })
        .clone()
}
