//! Run configuration, the time-integration driver and CSV output.

mod check;
mod config;
mod run;

pub use check::{run_checks, CheckOutcome};
pub use config::{parse_config, RunConfig, Scenario};
pub use run::{
    convergence_samples, convergence_study, convergence_table, field_csv, refined, run, ConvergenceTable,
    DiagnosticsRow, RunReport, Simulation, VariableErrors, DIAGNOSTICS_HEADER,
};
