use super::mode::uniform_step;
use super::roots::ModeSolution;
use crate::error::{Error, Result};
use crate::expint::{phi1_real, phi2_real};
use crate::field::SpectralField;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::io::Write;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn check_series(name: &str, s: &[SpectralField], times: &[f64], like: &SpectralField) -> Result<()> {
    if s.len() != times.len() {
        return Err(Error::TimeGrid(format!("{name}: {} samples for {} times", s.len(), times.len())));
    }
    if s.iter().any(|f| f.grid() != like.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// ũ_t − νΔũ = g, ũ(t₀) = u0, exact for g linear between samples.
pub fn heat_lift(u0: &SpectralField, g: Option<&[SpectralField]>, nu: f64, times: &[f64]) -> Result<Vec<SpectralField>> {
    let dt = uniform_step(times)?;
    if let Some(g) = g {
        check_series("g", g, times, u0)?;
        if g.iter().any(|f| f.comps() != u0.comps()) {
            return Err(Error::Shape { expected: u0.comps(), got: g[0].comps() });
        }
    }
    let grid = u0.grid();
    let len = grid.len();
    let k2 = grid.k_squared();
    let mut e = Vec::with_capacity(len);
    let mut c1 = Vec::with_capacity(len);
    let mut c2 = Vec::with_capacity(len);
    for &kk in k2.iter() {
        let z = -nu * kk * dt;
        e.push(z.exp());
        c1.push(dt * phi1_real(z));
        c2.push(dt * phi2_real(z));
    }
    let mut out = Vec::with_capacity(times.len());
    out.push(u0.clone());
    for n in 0..times.len() - 1 {
        let mut next = out[n].clone();
        let cur = out[n].coeffs();
        for (i, c) in next.coeffs_mut().iter_mut().enumerate() {
            let f = i % len;
            *c = cur[i] * e[f];
            if let Some(g) = g {
                let g0 = g[n].coeffs()[i];
                let g1 = g[n + 1].coeffs()[i];
                *c += g0 * c1[f] + (g1 - g0) * c2[f];
            }
        }
        out.push(next);
    }
    Ok(out)
}

/// Sampled solution of the linear system.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub times: Vec<f64>,
    pub nu: f64,
    pub a: Vec<SpectralField>,
    pub u: Vec<SpectralField>,
    /// d = div u minus the div of the heat lift.
    pub d: Vec<SpectralField>,
    pub modes: BTreeMap<Vec<i64>, ModeSolution>,
}

/// Exact one-step map for the longitudinal pair (a_k, q_k = i k·u_k):
/// a' = −q + F_a, q' = c·a − b·q + F_q with (F_a, F_q) linear on the step.
struct PairPropagator {
    p: [[f64; 6]; 2],
}

impl PairPropagator {
    fn new(b: f64, c: f64, dt: f64) -> Self {
        #[rustfmt::skip]
        let m = [
            0.0, -1.0, 1.0, 0.0, 0.0, 0.0,
            c,   -b,   0.0, 1.0, 0.0, 0.0,
            0.0, 0.0,  0.0, 0.0, 1.0, 0.0,
            0.0, 0.0,  0.0, 0.0, 0.0, 1.0,
            0.0, 0.0,  0.0, 0.0, 0.0, 0.0,
            0.0, 0.0,  0.0, 0.0, 0.0, 0.0,
        ];
        let scaled: Vec<f64> = m.iter().map(|x| x * dt).collect();
        let e = crate::linalg::expm(&scaled, 6);
        let mut p = [[0.0; 6]; 2];
        for i in 0..2 {
            for j in 0..6 {
                p[i][j] = e[i * 6 + j];
            }
        }
        Self { p }
    }

    fn apply(&self, v: [Complex64; 6]) -> (Complex64, Complex64) {
        let row = |i: usize| (0..6).map(|j| v[j] * self.p[i][j]).sum::<Complex64>();
        (row(0), row(1))
    }
}

/// Derivative symbol per axis with the Nyquist entry zeroed, matching
/// `SpectralField::derivative`.
fn symbol(k: &[i64], n: usize) -> Vec<f64> {
    k.iter().map(|&x| if x == (n / 2) as i64 { 0.0 } else { x as f64 }).collect()
}

/// Split a vector field into the part orthogonal to the derivative symbol
/// and the scalar q = i k·v.
fn split_longitudinal(v: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = v.grid();
    let len = grid.len();
    let dim = grid.dim();
    let ks = grid.wavevectors();
    let mut perp = v.clone();
    let mut q = SpectralField::zeros(grid, 1);
    for f in 0..len {
        let kt = symbol(&ks[f], grid.n());
        let kk: f64 = kt.iter().map(|x| x * x).sum();
        if kk == 0.0 {
            continue;
        }
        let dot: Complex64 = (0..dim).map(|c| v.coeffs()[c * len + f] * kt[c]).sum();
        q.coeffs_mut()[f] = Complex64::new(0.0, 1.0) * dot;
        for c in 0..dim {
            perp.coeffs_mut()[c * len + f] -= dot * (kt[c] / kk);
        }
    }
    (perp, q)
}

/// Solves a_t + div u = h, u_t − νΔu + ∇Ka = g with data (a0, u0).
/// `None` forcings are zero. Forcings are taken linear between samples.
///
/// The transverse part of u is a heat lift. The pair (a, i k·u) obeys a
/// 2×2 system per mode, propagated exactly; eliminating a from it gives
/// the second-order equation for d = div(u − ũ) with ũ the heat lift of
/// (u0, g), whose closed-form solution is recorded in `modes`.
pub fn solve_linear_system(
    a0: &SpectralField,
    u0: &SpectralField,
    h: Option<&[SpectralField]>,
    g: Option<&[SpectralField]>,
    nu: f64,
    times: &[f64],
) -> Result<LinearSolution> {
    let grid = a0.grid();
    let dim = grid.dim();
    if a0.comps() != 1 || u0.comps() != dim {
        return Err(Error::Shape { expected: dim, got: u0.comps() });
    }
    if u0.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if let Some(h) = h {
        check_series("h", h, times, a0)?;
    }
    if let Some(g) = g {
        check_series("g", g, times, u0)?;
    }
    let step = uniform_step(times)?;
    let nt = times.len();
    let len = grid.len();
    let ks = grid.wavevectors();
    let k2 = grid.k_squared();

    let (u0_perp, q0) = split_longitudinal(u0);
    let (g_perp, gq): (Option<Vec<SpectralField>>, Option<Vec<SpectralField>>) = match g {
        Some(g) => {
            let parts: Vec<_> = g.iter().map(split_longitudinal).collect();
            let (p, q): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
            (Some(p), Some(q))
        }
        None => (None, None),
    };
    let perp = heat_lift(&u0_perp, g_perp.as_deref(), nu, times)?;
    let lift = heat_lift(u0, g, nu, times)?;

    let mut a = vec![SpectralField::zeros(grid, 1); nt];
    let mut q = vec![SpectralField::zeros(grid, 1); nt];
    let mut modes = BTreeMap::new();
    for f in 1..len {
        let hk = |n: usize| h.map_or(ZERO, |h| h[n].coeffs()[f]);
        let gk = |n: usize| gq.as_ref().map_or(ZERO, |g| g[n].coeffs()[f]);
        let active = a0.coeffs()[f] != ZERO || q0.coeffs()[f] != ZERO || (0..nt).any(|n| hk(n) != ZERO || gk(n) != ZERO);
        if !active {
            continue;
        }
        let kt = symbol(&ks[f], grid.n());
        let c = kt.iter().map(|x| x * x).sum::<f64>() / k2[f];
        let prop = PairPropagator::new(nu * k2[f], c, step);
        let mut y = (a0.coeffs()[f], q0.coeffs()[f]);
        a[0].coeffs_mut()[f] = y.0;
        q[0].coeffs_mut()[f] = y.1;
        for n in 0..nt - 1 {
            let (fa, fq) = (hk(n), gk(n));
            let sa = (hk(n + 1) - fa) / step;
            let sq = (gk(n + 1) - fq) / step;
            y = prop.apply([y.0, y.1, fa, fq, sa, sq]);
            a[n + 1].coeffs_mut()[f] = y.0;
            q[n + 1].coeffs_mut()[f] = y.1;
        }
        modes.insert(ks[f].clone(), ModeSolution::new(&ks[f], nu)?.with_data(a0.coeffs()[f], ZERO));
    }
    // {a}(t) = {a0} + ∫{h}, trapezoid is exact for piecewise-linear h
    let mut mean = a0.coeffs()[0];
    for n in 0..nt {
        if n > 0 {
            if let Some(h) = h {
                mean += 0.5 * step * (h[n - 1].coeffs()[0] + h[n].coeffs()[0]);
            }
        }
        a[n].coeffs_mut()[0] = mean;
    }
    let mut u = Vec::with_capacity(nt);
    let mut d = Vec::with_capacity(nt);
    for n in 0..nt {
        let mut un = perp[n].clone();
        for f in 1..len {
            let kt = symbol(&ks[f], grid.n());
            let kk: f64 = kt.iter().map(|x| x * x).sum();
            if kk == 0.0 {
                continue;
            }
            let qn = q[n].coeffs()[f];
            for comp in 0..dim {
                un.coeffs_mut()[comp * len + f] += Complex64::new(0.0, -kt[comp] / kk) * qn;
            }
        }
        d.push(q[n].sub(&lift[n].divergence()?)?);
        u.push(un);
    }
    Ok(LinearSolution { times: times.to_vec(), nu, a, u, d, modes })
}

/// Fourth-order finite-difference time derivative of a uniformly sampled
/// series at index n (one-sided stencils near the ends).
pub fn time_derivative(s: &[SpectralField], dt: f64, n: usize) -> Result<SpectralField> {
    let m = s.len();
    if m < 5 {
        return Err(Error::TooShort(m));
    }
    let (base, w): (usize, [f64; 5]) = if n == 0 {
        (0, [-25.0, 48.0, -36.0, 16.0, -3.0])
    } else if n == 1 {
        (0, [-3.0, -10.0, 18.0, -6.0, 1.0])
    } else if n == m - 2 {
        (m - 5, [-1.0, 6.0, -18.0, 10.0, 3.0])
    } else if n == m - 1 {
        (m - 5, [3.0, -16.0, 36.0, -48.0, 25.0])
    } else {
        (n - 2, [1.0, -8.0, 0.0, 8.0, -1.0])
    };
    let mut out = SpectralField::zeros(s[0].grid(), s[0].comps());
    for (j, wj) in w.iter().enumerate() {
        if *wj != 0.0 {
            out.axpy(wj / (12.0 * dt), &s[base + j])?;
        }
    }
    Ok(out)
}

impl LinearSolution {
    /// L² residuals of both equations at every sample time, with time
    /// derivatives by fourth-order finite differences.
    pub fn residuals(&self, h: Option<&[SpectralField]>, g: Option<&[SpectralField]>) -> Result<Vec<(f64, f64)>> {
        let dt = uniform_step(&self.times)?;
        let mut out = Vec::with_capacity(self.times.len());
        for n in 0..self.times.len() {
            let at = time_derivative(&self.a, dt, n)?;
            let mut ra = at.add(&self.u[n].divergence()?)?;
            if let Some(h) = h {
                ra = ra.sub(&h[n])?;
            }
            let ut = time_derivative(&self.u, dt, n)?;
            let mut ru = ut.sub(&self.u[n].laplacian().scale(self.nu))?;
            ru = ru.add(&self.a[n].poisson_inverse().gradient()?)?;
            if let Some(g) = g {
                ru = ru.sub(&g[n])?;
            }
            out.push((ra.lp_norm(2.0)?, ru.lp_norm(2.0)?));
        }
        Ok(out)
    }

    pub fn energy(&self) -> Vec<f64> {
        self.a.iter().zip(&self.u).map(|(a, u)| linear_energy(a, u)).collect()
    }

    /// Columns t, a_l2, u_l2, d_l2, energy.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,a_l2,u_l2,d_l2,energy")?;
        for n in 0..self.times.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[n],
                self.a[n].lp_norm(2.0)?,
                self.u[n].lp_norm(2.0)?,
                self.d[n].lp_norm(2.0)?,
                linear_energy(&self.a[n], &self.u[n])
            )?;
        }
        Ok(())
    }
}

/// ½(‖u‖₂² + ‖a − {a}‖²_{H^{-1}}).
pub fn linear_energy(a: &SpectralField, u: &SpectralField) -> f64 {
    let grid = a.grid();
    let k2 = grid.k_squared();
    let h1: f64 = (1..grid.len()).map(|f| a.coeffs()[f].norm_sqr() / k2[f]).sum();
    0.5 * (u.lp_norm(2.0).unwrap_or(f64::NAN).powi(2) + grid.volume() * h1)
}
