//! Scenario files, presets and the runner behind the `qnls` binary.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{parse_config, Analyses, GridSpec, InitialData, Scenario};
pub use presets::{preset, PRESETS};
pub use runner::{check_scenario, run_scenario, sweep, RunReport};
