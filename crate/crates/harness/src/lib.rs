//! Experiment orchestration for the exclusion-process laboratory.
//!
//! * [`config`] defines the JSON experiment description.
//! * [`suite`] runs the selected suites deterministically from a master seed.
//! * [`ratios`] computes the report-only mixing-time shape ratios.
//! * [`report`] holds the report document and its JSON and CSV writers.
//! * [`acceptance`] implements the acceptance criteria run by the
//!   `acceptance` test target.

pub mod acceptance;
pub mod config;
pub mod ratios;
pub mod report;
pub mod suite;

pub use config::{ExperimentConfig, SuiteKind};
pub use report::{Record, ReportDocument};
pub use suite::run_suite;
