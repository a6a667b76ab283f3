//! Experiment runner for `robust-lfd`: JSON configuration in, CSV tables and
//! a run manifest out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;

pub use config::{validate_config, ConfigError, Experiment, ExperimentConfig};
pub use experiments::{config_hash, manifest, run, write_outputs, Outputs};
