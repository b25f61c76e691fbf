//! Multi-dimensional complex FFT on flat row-major buffers.
//!
//! Plans are cached per thread, so concurrent workers never share mutable
//! planner state.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<usize, Plans>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> Plans {
    PLANS.with(|cell| {
        let mut cell = cell.borrow_mut();
        let (planner, cache) = &mut *cell;
        cache
            .entry(n)
            .or_insert_with(|| (planner.plan_fft_forward(n), planner.plan_fft_inverse(n)))
            .clone()
    })
}

thread_local! {
    static WORK: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// Unnormalized in-place d-dimensional FFT of an `n^dim` buffer.
/// `forward` uses e^{-ik·x}; the inverse direction uses e^{+ik·x}.
///
/// Strided axes are handled a tile of adjacent lines at a time: the tile is
/// gathered into a small contiguous buffer, transformed, and scattered back.
pub fn fft_nd(buf: &mut [Complex64], dim: usize, n: usize, forward: bool) {
    debug_assert_eq!(buf.len(), n.pow(dim as u32));
    let (fwd, inv) = plans(n);
    let plan = if forward { fwd } else { inv };
    let total = buf.len();
    WORK.with(|cell| {
        let mut cell = cell.borrow_mut();
        let (scratch, tile) = &mut *cell;
        scratch.resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                plan.process_with_scratch(buf, scratch);
                continue;
            }
            tile.resize(stride.min(TILE) * n, Complex64::new(0.0, 0.0));
            for outer in (0..total).step_by(stride * n) {
                for inner0 in (0..stride).step_by(TILE) {
                    let width = TILE.min(stride - inner0);
                    let tile = &mut tile[..width * n];
                    let base = outer + inner0;
                    for j in 0..n {
                        let row = &buf[base + j * stride..base + j * stride + width];
                        for (q, v) in row.iter().enumerate() {
                            tile[q * n + j] = *v;
                        }
                    }
                    plan.process_with_scratch(tile, scratch);
                    for j in 0..n {
                        let row = &mut buf[base + j * stride..base + j * stride + width];
                        for (q, v) in row.iter_mut().enumerate() {
                            *v = tile[q * n + j];
                        }
                    }
                }
            }
        }
    });
}

const TILE: usize = 16;

/// Forward transforms of two real arrays with one complex FFT.
/// Returns unnormalized spectra (A, B).
pub fn forward_real_pair(a: &[f64], b: &[f64], dim: usize, n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| Complex64::new(*x, *y)).collect();
    fft_nd(&mut z, dim, n, true);
    let len = z.len();
    let mut fa = vec![Complex64::new(0.0, 0.0); len];
    let mut fb = vec![Complex64::new(0.0, 0.0); len];
    let neg = negated_index(dim, n);
    for f in 0..len {
        let zc = z[neg[f]].conj();
        fa[f] = (z[f] + zc) * 0.5;
        fb[f] = (z[f] - zc) * Complex64::new(0.0, -0.5);
    }
    (fa, fb)
}

/// Flat index of −k for every flat index k, cached per shape.
fn negated_index(dim: usize, n: usize) -> Arc<Vec<usize>> {
    thread_local! {
        static NEG: RefCell<HashMap<(usize, usize), Arc<Vec<usize>>>> = RefCell::new(HashMap::new());
    }
    NEG.with(|cell| {
        cell.borrow_mut()
            .entry((dim, n))
            .or_insert_with(|| {
                let len = n.pow(dim as u32);
                let mut idx = vec![0usize; dim];
                let v = (0..len)
                    .map(|f| {
                        let mut rem = f;
                        for a in (0..dim).rev() {
                            idx[a] = rem % n;
                            rem /= n;
                        }
                        idx.iter().fold(0, |acc, &i| acc * n + (n - i) % n)
                    })
                    .collect();
                Arc::new(v)
            })
            .clone()
    })
}

/// Inverse transforms of two Hermitian spectra with one complex FFT.
/// Returns the real arrays (a, b).
pub fn inverse_real_pair(fa: &[Complex64], fb: &[Complex64], dim: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    // Hermitian parts, so the result equals the real part of each inverse
    let neg = negated_index(dim, n);
    let mut z: Vec<Complex64> = (0..fa.len())
        .map(|f| {
            let a = (fa[f] + fa[neg[f]].conj()) * 0.5;
            let b = (fb[f] + fb[neg[f]].conj()) * 0.5;
            a + Complex64::new(0.0, 1.0) * b
        })
        .collect();
    fft_nd(&mut z, dim, n, false);
    (z.iter().map(|c| c.re).collect(), z.iter().map(|c| c.im).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64], dim: usize, n: usize) -> Vec<Complex64> {
        let idx = |f: usize| (0..dim).rev().map(|a| (f / n.pow(a as u32)) % n).collect::<Vec<_>>();
        (0..x.len())
            .map(|k| {
                let kk = idx(k);
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                    let phase: usize = idx(j).iter().zip(&kk).map(|(a, b)| a * b).sum();
                    acc + v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (phase % n) as f64 / n as f64)
                })
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_off_tile_sizes() {
        for (dim, n) in [(2usize, 18usize), (3, 6), (2, 20), (3, 10)] {
            let len = n.pow(dim as u32);
            let x: Vec<Complex64> = (0..len).map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos())).collect();
            let mut y = x.clone();
            fft_nd(&mut y, dim, n, true);
            for (a, b) in y.iter().zip(naive_dft(&x, dim, n)) {
                assert!((a - b).norm() < 1e-9, "dim {dim} n {n}");
            }
        }
    }

    #[test]
    fn forward_inverse_scales_by_len() {
        let n = 8;
        let dim = 3;
        let len = n * n * n;
        let orig: Vec<Complex64> = (0..len)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut buf = orig.clone();
        fft_nd(&mut buf, dim, n, true);
        fft_nd(&mut buf, dim, n, false);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a / len as f64 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn single_axis_frequency_lands_on_correct_index() {
        let n = 8;
        let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                buf[i * n + j] = Complex64::from_polar(1.0, 2.0 * x);
            }
        }
        fft_nd(&mut buf, 2, n, true);
        // axis 0 carries k = 2, axis 1 carries k = 0
        assert!((buf[2 * n].re - (n * n) as f64).abs() < 1e-10);
        let rest: f64 = buf.iter().enumerate().filter(|(i, _)| *i != 2 * n).map(|(_, c)| c.norm()).sum();
        assert!(rest < 1e-9);
    }
}
