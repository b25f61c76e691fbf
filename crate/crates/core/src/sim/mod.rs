//! Eulerian time stepping, the aggregation equation and the Lagrangian
//! Picard construction.

mod aggregation;
pub mod config;
mod picard;
mod euler;
pub mod state;

pub use aggregation::{aggregation_rhs, aggregation_simulate, aggregation_step, AggregationOutput, AggregationRecord};
pub use config::{InitialData, Scheme, Sign, SimConfig};
pub use euler::{rhs_eulerian, simulate, step, step_conservative, Abort, Conservative, SimOutput};
pub use picard::{
    budget_distance, compare_with_eulerian, lagrangian_forcings, lagrangian_residual, picard_data, picard_iterate, Forcings,
    PicardConfig, PicardRun, PicardState, PicardStep,
};
pub use state::{initial_state, FluidState, StateDump};
