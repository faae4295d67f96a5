//! Configuration-driven experiment runner over `skg-core`.
//!
//! Each experiment expands a parameter grid, fans Monte Carlo trials out
//! to a worker pool, and aggregates into CSV. Per-trial results are
//! collected in trial order before any reduction, so output bytes are
//! identical for any worker count.

pub mod config;
pub mod demo;
pub mod experiments;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run_experiment, RunOutput};
