//! Experiment runner for the `mvpose` estimator: simulation, pipeline runs,
//! scoring, parameter sweeps and the acceptance self-test.
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod selftest;
pub mod sweep;

pub use error::{CliError, Result};

/// The reference benchmark configuration shipped with the crate.
pub const REFERENCE_CONFIG: &str = include_str!("../configs/reference.toml");
