//! Configured runs, parameter sweeps, run manifests and their file outputs.

pub mod config;
pub mod manifest;
pub mod output;
pub mod plot;
pub mod report;
pub mod run;
pub mod sweep;

pub use config::ExperimentConfig;
pub use manifest::{Product, RunManifest};
pub use sweep::{bandwidth_sweep, phase_map, population_phase_vs_bandwidth, SweepResult};
