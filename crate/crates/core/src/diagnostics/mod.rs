//! Energy, conservation and Besov-budget diagnostics, and the experiments
//! behind the command-line interface.

pub mod checks;
pub mod experiments;
pub mod record;

pub use checks::{
    besov_certify, lagrangian_check, picard_experiment, BesovCertifyConfig, BesovCertifyReport, LagrangianCheckConfig,
    PicardExperimentConfig, PicardSummary,
};
pub use experiments::{
    decay_fit, stability_sweep, DecayFit, DecayFitConfig, ExperimentKind, ExperimentSpec, ShellRate, SweepConfig,
    SweepReport, SweepRun,
};
pub use record::{
    budget_norms, csv_header, dissipation, energy, hminus1_sq, initial_budget, kinetic_energy, momentum,
    potential_energy_integral, record, write_csv, write_dat_files, DiagnosticsRecord, Tracker, BUDGET_TERMS,
};
