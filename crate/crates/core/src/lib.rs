//! Pseudo-spectral laboratory for the pressureless Navier–Stokes–Poisson
//! model of collective behaviour on the d-torus.
//!
//! The crate is organized by subsystem:
//!
//! * [`field`], [`grid`], [`io`]: truncated Fourier fields and spectral calculus.
//! * [`besov`]: Littlewood–Paley blocks, Besov norms and inequality certifiers.
//! * [`linear`]: closed-form solution of the linearized compressible Stokes system.
//! * [`sim`]: Eulerian time stepping, the aggregation equation and the
//!   Lagrangian Picard construction.
//! * [`lagrangian`]: flow maps, deformation matrices and transformed operators.
//! * [`diagnostics`]: energy, conservation and norm-budget bookkeeping plus the
//!   experiments driven by the `tslab` binary.

pub mod besov;
pub mod diagnostics;
pub mod error;
pub mod expint;
pub mod fft;
pub mod field;
pub mod grid;
pub mod io;
pub mod lagrangian;
pub mod linalg;
pub mod linear;
pub mod par;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::TorusGrid;
