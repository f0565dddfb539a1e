//! effectbench: statistical benchmarking for treatment-effect estimators.
//!
//! Instead of comparing models by mean error alone, this crate evaluates a
//! set of estimators over many simulations and reports:
//!
//! - per-simulation error metrics (absolute ATE error and PEHE),
//! - performance-profile curves of the error ratios,
//! - Friedman average ranks with a chi-squared omnibus test,
//! - Bergmann-Hommel adjusted p-values for every model pair.
//!
//! The `report` module orchestrates the full pipeline and writes a
//! deterministic report bundle; the `effectbench` binary exposes it as a
//! CLI. Each major capability also has a runnable example under
//! `examples/`.

pub mod baselines;
pub mod datagen;
pub mod error;
pub mod metrics;
pub mod posthoc;
pub mod profiles;
pub mod ranktest;
pub mod report;

mod numeric;
mod special;

pub use error::{Error, Result};
