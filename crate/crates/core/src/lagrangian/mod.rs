//! Lagrangian flow maps and the operators they induce.

pub mod deform;
pub mod equivalence;
pub mod map;
pub mod operators;
pub mod transport;

pub use deform::{
    advance_map, advance_map_eulerian, deformation_matrix, identity_field, inverse_residual,
    jacobian_determinant, neumann_inverse, DeformationMatrix, DeformationState, Inversion, MatrixField,
};
pub use equivalence::{co_advance, equivalence_check, CoAdvanced, EquivalenceRecord, EquivalenceReport, Worst};
pub use operators::{
    commutator_laplacian, divergence_u, gradient_u, lagrangian_inverse_laplacian, laplacian_u, EllipticReport,
};
pub use transport::{pullback, pushforward};
