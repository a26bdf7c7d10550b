//! Scenario engine: config parsing, the deterministic run loop, trajectory
//! logging, CSV and plot emission, and the CLI.

pub mod cli;
pub mod config;
pub mod log;
pub mod plot;
pub mod sim;

pub use config::{parse_config, ConfigError, LawConfig, ScenarioConfig};
pub use log::{LogMeta, TrajectoryLog};
pub use sim::{build_law, initial_states, run_scenario, LawRegistry, RunOptions, ScenarioError};
