//! Experiment runner for weighted-information bandits: configuration
//! parsing, seeded parallel replications, trace output, and the statistical
//! verification suite.

pub mod config;
pub mod error;
pub mod runner;
pub mod verify;

pub use config::{parse_config, parse_config_for, Mode, RunConfig};
pub use error::{ConfigError, RunError};
pub use runner::{execute, run, RunOutput, RunResult};
