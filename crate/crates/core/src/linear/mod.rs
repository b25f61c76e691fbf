//! Linearized compressible Stokes system
//! a_t + div u = h, u_t − νΔu + ∇Ka = g, solved mode by mode.

pub mod mode;
pub mod roots;
pub mod system;
pub mod verify;

pub use mode::{solve_forced_mode, solve_homogeneous_mode, uniform_step, ModeTrajectory, StepPropagator};
pub use roots::{characteristic_roots, roots_for, spectrum_report, Branch, ModeSolution, SpectrumRow, SpectrumTable, RESONANCE_TOL};
pub use system::{heat_lift, linear_energy, solve_linear_system, time_derivative, LinearSolution};
pub use verify::{linear_verify, representable_k2, LinearVerifyConfig, LinearVerifyReport, ModeCheck, SmoothForcing};
