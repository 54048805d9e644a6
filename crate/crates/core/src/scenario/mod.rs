//! Config-driven runs comparing the HJ solution against the oracle.

mod config;
mod report;
mod run;
mod sweep;

pub use config::{load_config, ConfigError, InitialConditions, ScenarioConfig, Tolerances, Window, NUMERIC_FIELDS};
pub use report::{Check, ComparisonReport, ConstantsSummary, ConstraintSummary, Deviations, Status};
pub use run::{run_scenario, verify_constraints, ScenarioRun, TrajectoryRow, CSV_HEADER, MODULUS_TOL};
pub use sweep::{summary_csv, sweep, SweepError, SweepRow, SUMMARY_HEADER};
