use crate::error::{Error, Result};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Per-grid lookup tables, built once and shared.
struct Tables {
    k: Arc<Vec<Vec<i64>>>,
    k2: Arc<Vec<f64>>,
    keep: Arc<Vec<bool>>,
}

impl Tables {
    fn build(g: &TorusGrid) -> Self {
        let mut idx = vec![0; g.dim];
        let k: Vec<Vec<i64>> = (0..g.len())
            .map(|f| {
                g.unravel(f, &mut idx);
                idx.iter().map(|&i| g.wavenumber(i)).collect()
            })
            .collect();
        let k2 = k.iter().map(|k| k.iter().map(|&x| (x * x) as f64).sum()).collect();
        let keep = k.iter().map(|k| g.dealias_keep(k)).collect();
        Self { k: Arc::new(k), k2: Arc::new(k2), keep: Arc::new(keep) }
    }
}

/// Uniform collocation grid on the d-torus with `n` points per axis.
///
/// Wavevectors are stored in FFT order: index `i` on an axis carries the
/// integer wavenumber `i` for `i <= n/2` and `i - n` otherwise, so the
/// retained set is `-n/2 < k_i <= n/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Grid("dimension must be at least 1".into()));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!("modes per axis must be even and >= 8, got {n}")));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of collocation points (equal to the number of retained modes).
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Volume of the torus, (2π)^d.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Integer wavenumber carried by FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index of an integer wavenumber, if retained.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k > half || k <= -half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
    }

    /// Per-axis FFT indices of a flat row-major position.
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Flat index of the wavevector k, if retained.
    pub fn flat_of(&self, k: &[i64]) -> Option<usize> {
        let mut flat = 0;
        for &ki in k {
            flat = flat * self.n + self.index_of(ki)?;
        }
        Some(flat)
    }

    fn tables(&self) -> Arc<Tables> {
        static CACHE: OnceLock<Mutex<HashMap<TorusGrid, Arc<Tables>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("grid table cache poisoned");
        map.entry(*self).or_insert_with(|| Arc::new(Tables::build(self))).clone()
    }

    /// Integer wavevector of every flat position, in row-major order.
    pub fn wavevectors(&self) -> Arc<Vec<Vec<i64>>> {
        self.tables().k.clone()
    }

    /// |k|² for every flat position.
    pub fn k_squared(&self) -> Arc<Vec<f64>> {
        self.tables().k2.clone()
    }

    /// Flat index of -k (Hermitian partner).
    pub fn conjugate_flat(&self, flat: usize) -> usize {
        let mut idx = vec![0; self.dim];
        self.unravel(flat, &mut idx);
        for i in idx.iter_mut() {
            *i = (self.n - *i) % self.n;
        }
        self.ravel(&idx)
    }

    /// Collocation coordinates of flat position `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = vec![0; self.dim];
        self.unravel(flat, &mut idx);
        idx.iter().map(|&i| i as f64 * self.spacing()).collect()
    }

    /// All collocation points, `dim` coordinates per point.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.point(f)).collect()
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self { dim: self.dim, n: self.n * factor }
    }

    /// Largest Littlewood–Paley block index that can be nonzero on this grid:
    /// the smallest M with 2^M >= sqrt(d)·n/2.
    pub fn max_block(&self) -> usize {
        let kmax = (self.dim as f64).sqrt() * (self.n / 2) as f64;
        let mut m = 0;
        while ((1u64 << m) as f64) < kmax {
            m += 1;
        }
        m
    }

    /// Whether the wavevector survives the 2/3 dealiasing rule.
    #[inline]
    pub fn dealias_keep(&self, k: &[i64]) -> bool {
        let cut = self.n as f64 / 3.0;
        k.iter().all(|&x| (x.abs() as f64) <= cut)
    }

    /// Per flat position: does the mode survive the 2/3 rule.
    pub fn dealias_mask(&self) -> Arc<Vec<bool>> {
        self.tables().keep.clone()
    }
}
