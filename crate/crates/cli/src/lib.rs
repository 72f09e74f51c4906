//! Experiment runner for `matphi`: reproduces the decay curves, Sobolev
//! constants and mixing-time bounds, and writes them as CSV.

#![forbid(unsafe_code)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use experiments::{run, run_constants, run_figure1, run_hypercube, run_mixing};
pub use report::{Check, Report};
