//! Moving fields between Eulerian and Lagrangian descriptions.

use super::deform::DeformationState;
use super::map::{check_diffeomorphism, compose, inverse_points};
use crate::error::Result;
use crate::field::SpectralField;

pub const INVERSE_TOL: f64 = 1e-12;

/// Eulerian → Lagrangian: f ∘ X.
pub fn pullback(f: &SpectralField, def: &DeformationState) -> Result<SpectralField> {
    check_diffeomorphism(&def.disp)?;
    compose(f, &def.positions())
}

/// Lagrangian → Eulerian: f ∘ X^{-1}.
pub fn pushforward(f: &SpectralField, def: &DeformationState) -> Result<SpectralField> {
    check_diffeomorphism(&def.disp)?;
    compose(f, &inverse_points(&def.disp, INVERSE_TOL)?)
}
