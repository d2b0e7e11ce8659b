//! Config-driven experiments on top of `qpf-core`: load a config, run one
//! subcommand, write CSV tables and a plain-text report.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use run::{run, write_outputs, Command, RunOutput};
