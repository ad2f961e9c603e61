//! Experiment runner for the Keller–Segel scheme in `ks-core`: scenario
//! presets, a flat `key = value` configuration format, parameter sweeps and
//! CSV/VTK output.

pub mod args;
pub mod config;
pub mod error;
pub mod runner;

pub use args::{execute, Cli, Command, ScenarioArgs};
pub use config::{parse_config, InitialData, Scenario, ScenarioKind};
pub use error::CliError;
pub use runner::{indicator_report, run_scenario, sweep, RunSummary, SweepSummary};
