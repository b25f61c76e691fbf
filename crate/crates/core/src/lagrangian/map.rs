//! Composition with near-identity maps Z(x) = x + disp(x) on the torus.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::linalg;

/// ∇disp at every collocation point, row-major d×d (row = component).
pub fn displacement_gradient(disp: &SpectralField) -> Result<Vec<Vec<f64>>> {
    let g = disp.grid();
    let d = g.dim();
    if disp.comps() != d {
        return Err(Error::Shape { expected: d, got: disp.comps() });
    }
    let grad = disp.jacobian()?.to_values();
    let len = g.len();
    // jacobian() stores ∂_b disp_a at component a*d + b
    Ok((0..len)
        .map(|i| (0..d * d).map(|ab| grad[ab * len + i]).collect())
        .collect())
}

/// Smallest det(I + ∇disp) over the collocation grid.
pub fn min_jacobian(disp: &SpectralField) -> Result<f64> {
    let d = disp.grid().dim();
    let id = linalg::identity(d);
    Ok(displacement_gradient(disp)?
        .iter()
        .map(|m| {
            let j: Vec<f64> = m.iter().zip(&id).map(|(a, b)| a + b).collect();
            linalg::det(&j, d)
        })
        .fold(f64::INFINITY, f64::min))
}

/// max over points of the ∞-norm of ∇disp.
pub fn gradient_sup(disp: &SpectralField) -> Result<f64> {
    let d = disp.grid().dim();
    Ok(displacement_gradient(disp)?.iter().map(|m| linalg::norm_inf(m, d)).fold(0.0, f64::max))
}

/// Fails unless det(I + ∇disp) > 0 at every collocation point.
pub fn check_diffeomorphism(disp: &SpectralField) -> Result<f64> {
    let mj = min_jacobian(disp)?;
    if mj > 0.0 {
        Ok(mj)
    } else {
        Err(Error::NotDiffeomorphism { min_jacobian: mj })
    }
}

/// Z(x_j) = x_j + disp(x_j) at the collocation points.
pub fn forward_points(disp: &SpectralField) -> Vec<Vec<f64>> {
    let g = disp.grid();
    let len = g.len();
    let vals = disp.to_values();
    (0..len)
        .map(|i| {
            let mut x = g.point(i);
            for (a, xa) in x.iter_mut().enumerate() {
                *xa += vals[a * len + i];
            }
            x
        })
        .collect()
}

/// Z^{-1}(x_j): solves y + disp(y) = x_j by fixed-point iteration
/// y ← y + ω(x_j − disp(y) − y), ω = 1 when ‖∇disp‖_∞ < 1/2 and 0.5 otherwise.
pub fn inverse_points(disp: &SpectralField, tol: f64) -> Result<Vec<Vec<f64>>> {
    let g = disp.grid();
    let omega = if gradient_sup(disp)? < 0.5 { 1.0 } else { 0.5 };
    let targets = g.points();
    let mut y = targets.clone();
    for _ in 0..500 {
        let dv = disp.eval_at(&y);
        let mut step = 0.0f64;
        for ((yi, xi), di) in y.iter_mut().zip(&targets).zip(&dv) {
            for a in 0..xi.len() {
                let delta = omega * (xi[a] - di[a] - yi[a]);
                yi[a] += delta;
                step = step.max(delta.abs());
            }
        }
        if step < tol {
            return Ok(y);
        }
    }
    Err(Error::NonContractive { factor: omega })
}

/// Field whose collocation values are f evaluated at `points`.
pub fn compose(f: &SpectralField, points: &[Vec<f64>]) -> Result<SpectralField> {
    let g = f.grid();
    let len = g.len();
    if points.len() != len {
        return Err(Error::Shape { expected: len, got: points.len() });
    }
    let vals = f.eval_at(points);
    let mut flat = vec![0.0; f.comps() * len];
    for (i, v) in vals.iter().enumerate() {
        for (c, x) in v.iter().enumerate() {
            flat[c * len + i] = *x;
        }
    }
    SpectralField::from_values(g, f.comps(), &flat)
}
