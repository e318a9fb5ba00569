//! Experiment runner behind the `dbar` binary.

pub mod checks;
pub mod config;
pub mod run;

pub use config::{parse_config, Experiment, ExperimentConfig, Format};
pub use run::{emit_report, run_experiment, RunReport};
