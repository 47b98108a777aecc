//! Library half of the `fracfast` command: configuration parsing and experiment dispatch.

pub mod config;
pub mod error;
pub mod experiment;
pub mod props;

pub use config::{build_config, parse_pairs, ExperimentConfig, ExperimentId};
pub use error::CliError;
pub use experiment::{run_experiment, Report};
