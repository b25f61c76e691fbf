//! Dense d×d helpers (row-major) for pointwise matrix fields.

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &[f64], d: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i * d + col].abs().total_cmp(&a[j * d + col].abs())).unwrap();
        if a[piv * d + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for j in 0..d {
                a.swap(piv * d + j, col * d + j);
            }
            det = -det;
        }
        let p = a[col * d + col];
        det *= p;
        for i in col + 1..d {
            let f = a[i * d + col] / p;
            for j in col..d {
                a[i * d + j] -= f * a[col * d + j];
            }
        }
    }
    det
}

/// Inverse by Gauss–Jordan; `None` if singular.
pub fn invert(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = identity(d);
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i * d + col].abs().total_cmp(&a[j * d + col].abs())).unwrap();
        if a[piv * d + col].abs() < 1e-300 {
            return None;
        }
        for j in 0..d {
            a.swap(piv * d + j, col * d + j);
            inv.swap(piv * d + j, col * d + j);
        }
        let p = a[col * d + col];
        for j in 0..d {
            a[col * d + j] /= p;
            inv[col * d + j] /= p;
        }
        for i in 0..d {
            if i != col {
                let f = a[i * d + col];
                for j in 0..d {
                    a[i * d + j] -= f * a[col * d + j];
                    inv[i * d + j] -= f * inv[col * d + j];
                }
            }
        }
    }
    Some(inv)
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

pub fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &[f64], d: usize) -> f64 {
    (0..d).map(|i| (0..d).map(|j| m[i * d + j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
pub fn expm(m: &[f64], d: usize) -> Vec<f64> {
    let norm = norm_inf(m, d);
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let scale = 2f64.powi(-squarings);
    let a: Vec<f64> = m.iter().map(|x| x * scale).collect();
    // carry r = e^a − I through the squarings, (I + r)² − I = 2r + r²,
    // which keeps the relative accuracy of entries close to the identity
    let mut r = vec![0.0; d * d];
    let mut term = identity(d);
    for j in 1..=18 {
        term = matmul(&term, &a, d);
        term.iter_mut().for_each(|x| *x /= j as f64);
        for (ri, t) in r.iter_mut().zip(&term) {
            *ri += t;
        }
    }
    for _ in 0..squarings {
        let sq = matmul(&r, &r, d);
        for (ri, s) in r.iter_mut().zip(&sq) {
            *ri = 2.0 * *ri + s;
        }
    }
    for i in 0..d {
        r[i * d + i] += 1.0;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse() {
        let m = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0];
        assert!((det(&m, 3) - 18.0).abs() < 1e-12);
        let inv = invert(&m, 3).unwrap();
        let id = matmul(&m, &inv, 3);
        for (x, y) in id.iter().zip(identity(3)) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
        assert_eq!(det(&[0.0, 1.0, 1.0, 0.0], 2), -1.0);
    }

    #[test]
    fn expm_rotation_and_decay() {
        let t = 2.5f64;
        let r = expm(&[0.0, -t, t, 0.0], 2);
        let want = [t.cos(), -t.sin(), t.sin(), t.cos()];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        let e = expm(&[-40.0, 0.0, 0.0, -0.1], 2);
        assert!((e[0] - (-40f64).exp()).abs() < 1e-16);
        assert!((e[3] - (-0.1f64).exp()).abs() < 1e-15);
    }
}
