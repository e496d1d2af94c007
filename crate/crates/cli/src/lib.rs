//! Experiment driver: TOML-configured runs that write CSV tables, JSON-lines
//! trial histories, SVG figures and a checksummed JSON manifest.

// `!(x > 0.0)` style checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod plot;
pub mod render;

pub use config::{ExperimentConfig, ExperimentKind, Metric, Overrides};
pub use experiments::run;
