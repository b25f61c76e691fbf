use super::cutoff::phi;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::fft::inverse_real_pair;
use crate::grid::TorusGrid;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use serde::{Deserialize, Serialize};

/// Selects the norm B^s_{p,q}. `p` and `q` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) || !(q >= 1.0) {
            return Err(Error::Param(format!("Besov index needs p, q >= 1 (p = {p}, q = {q})")));
        }
        Ok(Self { s, p, q })
    }

    /// B^s_{p,1}
    pub fn l1(s: f64, p: f64) -> Self {
        Self { s, p, q: 1.0 }
    }
}

/// The Littlewood–Paley pieces P_0 u, …, P_M u of a field.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub blocks: Vec<SpectralField>,
    pub max_block: usize,
}

impl BlockDecomposition {
    pub fn resum(&self) -> SpectralField {
        let mut acc = SpectralField::zeros(self.blocks[0].grid(), self.blocks[0].comps());
        for b in &self.blocks {
            acc.axpy(1.0, b).expect("blocks share a grid");
        }
        acc
    }
}

fn radius(k: &[i64]) -> f64 {
    (k.iter().map(|&x| (x * x) as f64).sum::<f64>()).sqrt()
}

/// φ_m(|k|) at every mode of `g`, cached per grid.
fn phi_table(g: TorusGrid, m: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(TorusGrid, usize), Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("cutoff cache poisoned");
    map.entry((g, m)).or_insert_with(|| Arc::new(g.wavevectors().iter().map(|k| phi(m, radius(k))).collect())).clone()
}

/// P_m u: coefficient-wise multiplication by φ_m(k).
pub fn lp_block(u: &SpectralField, m: usize) -> SpectralField {
    let g = u.grid();
    if m > g.max_block() {
        return SpectralField::zeros(g, u.comps());
    }
    let table = phi_table(g, m);
    let len = g.len();
    let mut out = u.clone();
    for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
        *c *= table[i % len];
    }
    out
}

pub fn blocks(u: &SpectralField) -> BlockDecomposition {
    let max_block = u.grid().max_block();
    BlockDecomposition { blocks: (0..=max_block).map(|m| lp_block(u, m)).collect(), max_block }
}

/// ‖P_m u‖_p for m = 0..=M, with the same quadrature as `SpectralField::lp_norm`.
pub fn block_norms(u: &SpectralField, p: f64) -> Result<Vec<f64>> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Param(format!("L^p norm needs p >= 1, got {p}")));
    }
    let g = u.grid();
    let max_block = g.max_block();
    if p == 2.0 {
        return blocks(u).blocks.iter().map(|b| b.lp_norm(p)).collect();
    }
    let m = 2 * g.n();
    let fine = TorusGrid::new(g.dim(), m)?;
    let flen = fine.len();
    let padded = u.padded_coeffs(m);
    // one real array per (block, component); blocks with no content skipped
    let mut jobs: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for b in 0..=max_block {
        let table = phi_table(fine, b);
        for c in 0..u.comps() {
            let src = &padded[c * flen..(c + 1) * flen];
            let arr: Vec<Complex64> = src.iter().zip(table.iter()).map(|(x, w)| x * w).collect();
            if arr.iter().any(|x| x.norm_sqr() > 0.0) {
                jobs.push((b, arr));
            }
        }
    }
    let mut mag2 = vec![vec![0.0f64; flen]; max_block + 1];
    let zero = vec![Complex64::new(0.0, 0.0); flen];
    for pair in jobs.chunks(2) {
        let (va, vb) = inverse_real_pair(&pair[0].1, pair.get(1).map_or(&zero, |j| &j.1), fine.dim(), m);
        for (acc, v) in mag2[pair[0].0].iter_mut().zip(&va) {
            *acc += v * v;
        }
        if let Some(j) = pair.get(1) {
            for (acc, v) in mag2[j.0].iter_mut().zip(&vb) {
                *acc += v * v;
            }
        }
    }
    let cell = g.volume() / flen as f64;
    Ok(mag2
        .iter()
        .map(|sq| {
            if p.is_infinite() {
                sq.iter().fold(0.0f64, |a, &x| a.max(x)).sqrt()
            } else {
                (cell * sq.iter().map(|&x| x.powf(0.5 * p)).sum::<f64>()).powf(1.0 / p)
            }
        })
        .collect())
}

/// Combine block norms into (Σ_m 2^{smq} n_m^q)^{1/q}, or the max for q = ∞.
pub fn besov_from_blocks(norms: &[f64], s: f64, q: f64) -> f64 {
    let weighted = norms.iter().enumerate().map(|(m, n)| 2f64.powf(s * m as f64) * n);
    if q.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else if q == 1.0 {
        weighted.sum()
    } else {
        weighted.map(|w| w.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

pub fn besov_norm(u: &SpectralField, idx: BesovIndex) -> Result<f64> {
    Ok(besov_from_blocks(&block_norms(u, idx.p)?, idx.s, idx.q))
}

/// Multiply coefficients by a real Fourier multiplier M(k).
pub fn apply_multiplier<M: Fn(&[f64]) -> f64>(u: &SpectralField, m: M) -> Result<SpectralField> {
    let grid = u.grid();
    let mut values = Vec::with_capacity(grid.len());
    for k in grid.wavevectors().iter() {
        let kf: Vec<f64> = k.iter().map(|&x| x as f64).collect();
        let v = m(&kf);
        if !v.is_finite() {
            return Err(Error::NonFiniteMultiplier(k.clone()));
        }
        values.push(v);
    }
    let len = grid.len();
    let mut out = u.clone();
    for c in 0..u.comps() {
        for (f, v) in values.iter().enumerate() {
            out.coeffs_mut()[c * len + f] *= *v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::rng::{random_trig_polynomial, rng_for};
    use std::f64::consts::PI;

    fn wave4(g: TorusGrid) -> SpectralField {
        SpectralField::from_fn(g, 2, |x| vec![(4.0 * x[0]).cos(), (4.0 * x[0]).sin()])
    }

    #[test]
    fn wave_lives_in_block_two() {
        let g = TorusGrid::new(3, 16).unwrap();
        let u = wave4(g);
        let dec = blocks(&u);
        for (m, b) in dec.blocks.iter().enumerate() {
            if m == 2 {
                assert!(b.max_coeff_diff(&u).unwrap() < 1e-15);
            } else {
                assert!(b.energy_sum() < 1e-30);
            }
        }
    }

    #[test]
    fn constant_lives_in_block_zero() {
        let g = TorusGrid::new(3, 8).unwrap();
        let u = SpectralField::constant(g, 1.0);
        assert_eq!(lp_block(&u, 0), u);
        for m in 1..5 {
            assert_eq!(lp_block(&u, m).energy_sum(), 0.0);
        }
    }

    #[test]
    fn wave_besov_norm() {
        let g = TorusGrid::new(3, 16).unwrap();
        let n = besov_norm(&wave4(g), BesovIndex::l1(1.0, 2.0)).unwrap();
        let expect = 4.0 * (2.0 * PI).powf(1.5);
        assert!((n - expect).abs() < 1e-11 * expect);
    }

    #[test]
    fn zero_and_homogeneity() {
        let g = TorusGrid::new(3, 8).unwrap();
        let idx = BesovIndex::new(0.7, 3.0, 2.0).unwrap();
        assert_eq!(besov_norm(&SpectralField::zeros(g, 1), idx).unwrap(), 0.0);
        let u = random_trig_polynomial(g, 1, 3, 0.5, false, &mut rng_for(3, 0));
        let a = besov_norm(&u, idx).unwrap();
        let b = besov_norm(&u.scale(-2.5), idx).unwrap();
        assert!((b - 2.5 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn rejects_bad_index() {
        assert!(BesovIndex::new(0.0, 0.5, 1.0).is_err());
        assert!(BesovIndex::new(0.0, 1.0, 0.0).is_err());
        assert!(BesovIndex::new(0.0, f64::INFINITY, f64::INFINITY).is_ok());
    }

    #[test]
    fn multiplier_examples() {
        let g = TorusGrid::new(3, 16).unwrap();
        let u = wave4(g);
        assert_eq!(apply_multiplier(&u, |_| 1.0).unwrap(), u);
        let heat = apply_multiplier(&u, |k| (-0.1 * k.iter().map(|x| x * x).sum::<f64>()).exp()).unwrap();
        assert!(heat.max_coeff_diff(&u.scale((-1.6f64).exp())).unwrap() < 1e-15);
        let inv = apply_multiplier(&u, |k| 1.0 / k.iter().map(|x| x * x).sum::<f64>());
        assert!(matches!(inv, Err(Error::NonFiniteMultiplier(_))));
    }
}
