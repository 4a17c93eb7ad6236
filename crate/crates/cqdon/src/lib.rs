//! Experiment harness around `cqdon-core`: TOML experiment configs and
//! presets, dataset/checkpoint/metrics files, FFT-based trunk frequencies and
//! the pipeline steps behind the `cqdon` command line.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod spectrum;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
