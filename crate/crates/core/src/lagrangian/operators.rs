//! Differential operators in Lagrangian coordinates: ∇_u = Aᵀ∇,
//! div_u v = A_ki ∂_k v_i and Δ_u = div_u ∇_u. All products are dealiased.

use serde::Serialize;

use super::deform::{identity_field, jacobian_determinant, MatrixField};
use crate::error::{Error, Result};
use crate::field::SpectralField;

fn check_matrix(w: &SpectralField, a: &MatrixField) -> Result<usize> {
    let d = w.grid().dim();
    if a.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    if a.comps() != d * d {
        return Err(Error::Shape { expected: d * d, got: a.comps() });
    }
    Ok(d)
}

/// Mᵀ∇w for a scalar w.
fn transpose_apply(m: &MatrixField, grad: &SpectralField, d: usize) -> Result<SpectralField> {
    let mut parts = Vec::with_capacity(d);
    for i in 0..d {
        let mut acc = SpectralField::zeros(grad.grid(), 1);
        for j in 0..d {
            acc.axpy(1.0, &m.component(j * d + i).product(&grad.component(j))?)?;
        }
        parts.push(acc);
    }
    SpectralField::from_components(&parts)
}

/// ∇_u w = Aᵀ∇w.
pub fn gradient_u(w: &SpectralField, a: &MatrixField) -> Result<SpectralField> {
    let d = check_matrix(w, a)?;
    transpose_apply(a, &w.gradient()?, d)
}

/// div_u v = Σ A_ki ∂_k v_i.
pub fn divergence_u(v: &SpectralField, a: &MatrixField) -> Result<SpectralField> {
    let d = v.grid().dim();
    if a.comps() != d * d || v.comps() != d {
        return Err(Error::Shape { expected: d * d, got: a.comps() });
    }
    let jac = v.jacobian()?;
    let mut out = SpectralField::zeros(v.grid(), 1);
    for i in 0..d {
        for k in 0..d {
            out.axpy(1.0, &a.component(k * d + i).product(&jac.component(i * d + k))?)?;
        }
    }
    Ok(out)
}

/// B = A − I.
fn deviation(a: &MatrixField) -> Result<MatrixField> {
    a.sub(&identity_field(a.grid()))
}

/// (Δ_u − Δ)w = ∂_i(B_ji ∂_j w) + B_ki ∂_k(A_ji ∂_j w), B = A − I.
/// Exactly zero in coefficient space when A = I.
pub fn commutator_laplacian(w: &SpectralField, a: &MatrixField) -> Result<SpectralField> {
    let d = check_matrix(w, a)?;
    if w.comps() != 1 {
        return Err(Error::Param("commutator needs a scalar field".into()));
    }
    let b = deviation(a)?;
    let grad = w.gradient()?;
    let bt = transpose_apply(&b, &grad, d)?;
    let mut out = bt.divergence()?;
    // Aᵀ∇w = ∇w + Bᵀ∇w
    let v = grad.add(&bt)?;
    let jac = v.jacobian()?;
    for i in 0..d {
        for k in 0..d {
            out.axpy(1.0, &b.component(k * d + i).product(&jac.component(i * d + k))?)?;
        }
    }
    Ok(out)
}

/// Δ_u w.
pub fn laplacian_u(w: &SpectralField, a: &MatrixField) -> Result<SpectralField> {
    w.laplacian().add(&commutator_laplacian(w, a)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticReport {
    pub iterations: usize,
    /// Largest ratio of consecutive increments.
    pub contraction: f64,
    /// Jacobian-weighted mean of a removed before solving.
    pub weighted_mean: f64,
}

pub const ELLIPTIC_TOL: f64 = 1e-10;
const ELLIPTIC_CAP: usize = 500;

/// Solves −Δ_u f = a − c, c = ∫a J / ∫J with J = det ∇X = 1/det A, the
/// compatibility constant on the torus. Iterates
/// f ← (−Δ)^{-1}(a − c + (Δ_u − Δ)f) until the increment is below 1e-10.
pub fn lagrangian_inverse_laplacian(a: &SpectralField, m: &MatrixField) -> Result<(SpectralField, EllipticReport)> {
    check_matrix(a, m)?;
    let jac = jacobian_determinant(m)?;
    let weighted_mean = a.product(&jac)?.mean_scalar() / jac.mean_scalar();
    let rhs = a.add_constant(-weighted_mean);
    let mut f = rhs.poisson_inverse();
    let mut prev_inc = f64::INFINITY;
    let mut contraction = 0.0f64;
    let mut growth = 0;
    for it in 1..=ELLIPTIC_CAP {
        let next = rhs.add(&commutator_laplacian(&f, m)?)?.poisson_inverse();
        let inc = next.max_coeff_diff(&f)?;
        f = next;
        if inc <= ELLIPTIC_TOL * (1.0 + f.energy_sum().sqrt()) {
            return Ok((f, EllipticReport { iterations: it, contraction, weighted_mean }));
        }
        if prev_inc.is_finite() {
            let r = inc / prev_inc;
            contraction = contraction.max(r);
            growth = if r > 1.0 { growth + 1 } else { 0 };
            if growth >= 2 {
                return Err(Error::NonContractive { factor: r });
            }
        }
        prev_inc = inc;
    }
    Err(Error::NonContractive { factor: contraction })
}
