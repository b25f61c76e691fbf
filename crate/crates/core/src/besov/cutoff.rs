//! Smooth dyadic cutoff.
//!
//! χ(z) = 1 for z <= 1, 0 for z >= 2 and h(2−z)/(h(2−z)+h(z−1)) in between,
//! with h(t) = exp(−1/t) for t > 0. Blocks: φ₀ = χ(|x|),
//! φ_j(x) = χ(|x|/2^j) − χ(|x|/2^{j−1}) for j >= 1, so Σ_j φ_j ≡ 1.

fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

pub fn chi(z: f64) -> f64 {
    if z <= 1.0 {
        1.0
    } else if z >= 2.0 {
        0.0
    } else {
        let a = h(2.0 - z);
        a / (a + h(z - 1.0))
    }
}

/// φ_m evaluated at radius r = |x|.
pub fn phi(m: usize, r: f64) -> f64 {
    if m == 0 {
        chi(r)
    } else {
        let scale = (1u64 << m) as f64;
        chi(r / scale) - chi(2.0 * r / scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 0.0);
        assert_eq!(phi(2, 4.0), 1.0);
        assert_eq!(phi(1, 4.0), 0.0);
        assert_eq!(phi(3, 4.0), 0.0);
        assert_eq!(phi(0, 0.0), 1.0);
    }

    #[test]
    fn partition_of_unity() {
        for i in 0..2000 {
            let r = i as f64 * 0.037;
            let s: f64 = (0..12).map(|m| phi(m, r)).sum();
            assert!((s - 1.0).abs() < 1e-12, "r = {r}: sum {s}");
        }
    }

    #[test]
    fn support_of_blocks() {
        for m in 1..6 {
            let lo = (1u64 << (m - 1)) as f64;
            let hi = (1u64 << (m + 1)) as f64;
            for i in 0..4000 {
                let r = i as f64 * 0.02;
                if phi(m, r) != 0.0 {
                    assert!(r > lo && r < hi, "phi_{m}({r}) nonzero outside support");
                }
            }
        }
    }

    #[test]
    fn chi_is_monotone() {
        let mut prev = 1.0;
        for i in 0..=1000 {
            let c = chi(1.0 + i as f64 / 1000.0);
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }
}
