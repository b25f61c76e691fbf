//! Seeded randomness. Every random object is generated from a `ChaCha8Rng`
//! whose seed is derived from a root seed and a stream index, so results
//! are reproducible regardless of how work is split across threads.

use crate::field::SpectralField;
use crate::grid::TorusGrid;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer used to derive per-sample seeds.
pub fn split_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(root: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(split_seed(root, stream))
}

/// Wavevectors of the box |k_i| <= band in a canonical, grid-independent
/// order, keeping one representative of each ±k pair (plus k = 0).
pub fn half_box(dim: usize, band: i64) -> Vec<Vec<i64>> {
    let side = (2 * band + 1) as usize;
    let total = side.pow(dim as u32);
    let mut out = Vec::new();
    for mut f in 0..total {
        let mut k = vec![0i64; dim];
        for a in (0..dim).rev() {
            k[a] = (f % side) as i64 - band;
            f /= side;
        }
        // keep k if its first nonzero entry is positive
        match k.iter().find(|&&x| x != 0) {
            None => out.push(k),
            Some(&x) if x > 0 => out.push(k),
            _ => {}
        }
    }
    out
}

/// Random real trigonometric polynomial with |k_i| <= band.
///
/// Coefficients are drawn in a canonical order so the same seed produces
/// the same polynomial on any grid with n/2 > band. Amplitudes are scaled by
/// (1 + |k|²)^(-decay/2). When `mean_zero` the k = 0 coefficient is zero.
pub fn random_trig_polynomial<R: Rng>(
    grid: TorusGrid,
    comps: usize,
    band: i64,
    decay: f64,
    mean_zero: bool,
    rng: &mut R,
) -> SpectralField {
    assert!((band as usize) < grid.n() / 2, "band must stay below the Nyquist mode");
    let mut f = SpectralField::zeros(grid, comps);
    let keys = half_box(grid.dim(), band);
    for c in 0..comps {
        for k in &keys {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            let k2: f64 = k.iter().map(|&x| (x * x) as f64).sum();
            let w = (1.0 + k2).powf(-decay / 2.0);
            if k2 == 0.0 {
                if !mean_zero {
                    f.set_coeff(k, c, Complex64::new(re * w, 0.0));
                }
                continue;
            }
            let val = Complex64::new(re, im) * w;
            f.set_coeff(k, c, val);
            let neg: Vec<i64> = k.iter().map(|&x| -x).collect();
            f.set_coeff(&neg, c, val.conj());
        }
    }
    f
}
