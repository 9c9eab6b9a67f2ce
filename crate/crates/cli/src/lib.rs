//! Batch front end for `macau-core`: TOML run configs, model assembly from
//! files, repeated runs with prediction and report output, and a split tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
pub mod split;

pub use config::{parse_config, parse_config_str, RunConfig, Vary};
pub use error::{CliError, Result};
pub use run::{build_model, run, validate, RepetitionReport, RunReport};
pub use split::split_file;
