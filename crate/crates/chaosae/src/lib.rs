#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Configuration, file formats, experiment pipelines and plots on top of
//! `chaosae-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod plot;
pub mod report;

pub use config::{CliOverrides, ExperimentConfig, Scale};
pub use error::{HarnessError, Result};
