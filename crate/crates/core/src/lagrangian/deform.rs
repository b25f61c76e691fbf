//! Flow map X = id + disp and its deformation matrix A = (∇X)^{-1}.

use serde::Serialize;

use super::map::{displacement_gradient, forward_points};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::linalg;

pub const SERIES_TOL: f64 = 1e-12;
pub const SERIES_CAP: usize = 200;

/// Matrix field stored as d² components, component i*d + j is M_ij.
pub type MatrixField = SpectralField;

#[derive(Clone, Debug)]
pub struct DeformationState {
    /// X − id, periodic.
    pub disp: SpectralField,
    /// (∇X)^{-1}.
    pub a: MatrixField,
    /// Accumulated Σ dt·‖∇u‖_∞.
    pub gamma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum Inversion {
    Series { max_terms: usize },
    Direct { max_condition: f64 },
}

#[derive(Clone, Debug)]
pub struct DeformationMatrix {
    pub a: MatrixField,
    pub method: Inversion,
    /// max over points of ‖A·∇X − I‖_∞.
    pub residual: f64,
}

impl DeformationState {
    pub fn identity(grid: crate::TorusGrid) -> Self {
        let d = grid.dim();
        Self { disp: SpectralField::zeros(grid, d), a: identity_field(grid), gamma: 0.0 }
    }

    /// Build from a displacement; `gamma` starts at ‖∇disp‖_∞.
    pub fn from_displacement(disp: SpectralField) -> Result<Self> {
        let gamma = super::map::gradient_sup(&disp)?;
        let mut s = Self { a: identity_field(disp.grid()), disp, gamma };
        s.a = deformation_matrix(&s)?.a;
        Ok(s)
    }

    /// Positions X(y_j) at the collocation points.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        forward_points(&self.disp)
    }
}

/// Constant identity matrix field.
pub fn identity_field(grid: crate::TorusGrid) -> MatrixField {
    let d = grid.dim();
    let id = linalg::identity(d);
    let mut m = SpectralField::zeros(grid, d * d);
    let len = grid.len();
    for (c, v) in id.iter().enumerate() {
        m.coeffs_mut()[c * len].re = *v;
    }
    m
}

/// Advance with the Lagrangian velocity known at both ends of the step:
/// X ← X + dt/2·(u_start + u_end), the two-stage integral form of X = id + ∫u.
pub fn advance_map(def: &DeformationState, u_start: &SpectralField, u_end: &SpectralField, dt: f64) -> Result<DeformationState> {
    let mut disp = def.disp.clone();
    disp.axpy(0.5 * dt, u_start)?;
    disp.axpy(0.5 * dt, u_end)?;
    let grad = super::map::gradient_sup(u_start)?.max(super::map::gradient_sup(u_end)?);
    let mut next = DeformationState { disp, a: def.a.clone(), gamma: def.gamma + dt * grad };
    next.a = deformation_matrix(&next)?.a;
    Ok(next)
}

/// Advance along an Eulerian velocity known at both ends of the step:
/// Heun's method on dX/dt = v(t, X) at every collocation point.
pub fn advance_map_eulerian(def: &DeformationState, v_start: &SpectralField, v_end: &SpectralField, dt: f64) -> Result<DeformationState> {
    let g = def.disp.grid();
    let d = g.dim();
    let len = g.len();
    let x0 = def.positions();
    let k1 = v_start.eval_at(&x0);
    let x1: Vec<Vec<f64>> = x0.iter().zip(&k1).map(|(x, k)| x.iter().zip(k).map(|(a, b)| a + dt * b).collect()).collect();
    let k2 = v_end.eval_at(&x1);
    let mut vals = def.disp.to_values();
    for i in 0..len {
        for a in 0..d {
            vals[a * len + i] += 0.5 * dt * (k1[i][a] + k2[i][a]);
        }
    }
    let disp = SpectralField::from_values(g, d, &vals)?;
    // ∇(v∘X) from the point values already computed
    let lagr = SpectralField::from_values(g, d, &transpose(&k1, d))?;
    let gamma = def.gamma + dt * super::map::gradient_sup(&lagr)?;
    let mut next = DeformationState { disp, a: def.a.clone(), gamma };
    next.a = deformation_matrix(&next)?.a;
    Ok(next)
}

fn transpose(points: &[Vec<f64>], d: usize) -> Vec<f64> {
    let len = points.len();
    let mut out = vec![0.0; d * len];
    for (i, p) in points.iter().enumerate() {
        for a in 0..d {
            out[a * len + i] = p[a];
        }
    }
    out
}

/// (I + m)^{-1} = Σ (−m)^k, stopping when the increment drops below
/// `SERIES_TOL`. `None` when the cap is reached.
pub fn neumann_inverse(m: &[f64], d: usize) -> Option<(Vec<f64>, usize)> {
    let mut sum = linalg::identity(d);
    let neg: Vec<f64> = m.iter().map(|x| -x).collect();
    let mut term = sum.clone();
    for k in 1..=SERIES_CAP {
        term = linalg::matmul(&term, &neg, d);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        if linalg::norm_inf(&term, d) < SERIES_TOL {
            return Some((sum, k));
        }
    }
    None
}

fn condition(m: &[f64], inv: &[f64], d: usize) -> f64 {
    linalg::norm_inf(m, d) * linalg::norm_inf(inv, d)
}

/// A = (I + ∇disp)^{-1} pointwise. Uses the Neumann series while gamma and
/// the pointwise ‖∇disp‖_∞ are below 1/2, direct inversion otherwise.
pub fn deformation_matrix(def: &DeformationState) -> Result<DeformationMatrix> {
    let g = def.disp.grid();
    let d = g.dim();
    let len = g.len();
    let grads = displacement_gradient(&def.disp)?;
    let sup = grads.iter().map(|m| linalg::norm_inf(m, d)).fold(0.0, f64::max);
    let use_series = def.gamma < 0.5 && sup < 0.5;
    let id = linalg::identity(d);
    let mut vals = vec![0.0; d * d * len];
    let mut max_terms = 0;
    let mut max_cond = 0.0f64;
    let mut residual = 0.0f64;
    for (i, m) in grads.iter().enumerate() {
        let full: Vec<f64> = m.iter().zip(&id).map(|(a, b)| a + b).collect();
        let inv = match use_series.then(|| neumann_inverse(m, d)).flatten() {
            Some((inv, terms)) => {
                max_terms = max_terms.max(terms);
                inv
            }
            None => {
                let inv = linalg::invert(&full, d).ok_or(Error::NotDiffeomorphism { min_jacobian: linalg::det(&full, d) })?;
                max_cond = max_cond.max(condition(&full, &inv, d));
                inv
            }
        };
        let prod = linalg::matmul(&inv, &full, d);
        let r = prod.iter().zip(&id).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        residual = residual.max(r);
        for (c, v) in inv.iter().enumerate() {
            vals[c * len + i] = *v;
        }
    }
    let method = if use_series { Inversion::Series { max_terms } } else { Inversion::Direct { max_condition: max_cond } };
    Ok(DeformationMatrix { a: SpectralField::from_values(g, d * d, &vals)?, method, residual })
}

/// max over points of ‖A·(I + ∇disp) − I‖_∞ for a given A.
pub fn inverse_residual(a: &MatrixField, disp: &SpectralField) -> Result<f64> {
    let g = disp.grid();
    let d = g.dim();
    let len = g.len();
    let av = a.to_values();
    let id = linalg::identity(d);
    let mut worst = 0.0f64;
    for (i, m) in displacement_gradient(disp)?.iter().enumerate() {
        let full: Vec<f64> = m.iter().zip(&id).map(|(x, y)| x + y).collect();
        let ai: Vec<f64> = (0..d * d).map(|c| av[c * len + i]).collect();
        let prod = linalg::matmul(&ai, &full, d);
        worst = worst.max(prod.iter().zip(&id).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Pointwise det ∇X = 1/det A as a scalar field.
pub fn jacobian_determinant(a: &MatrixField) -> Result<SpectralField> {
    let g = a.grid();
    let d = g.dim();
    if a.comps() != d * d {
        return Err(Error::Shape { expected: d * d, got: a.comps() });
    }
    let len = g.len();
    let av = a.to_values();
    let j: Vec<f64> = (0..len)
        .map(|i| {
            let ai: Vec<f64> = (0..d * d).map(|c| av[c * len + i]).collect();
            1.0 / linalg::det(&ai, d)
        })
        .collect();
    SpectralField::from_values(g, 1, &j)
}
