//! Benchmark harness for the LDP contextual bandit library: environment
//! presets, TOML experiment configs, a deterministic parallel runner, CSV
//! reports and the acceptance checks.

pub mod acceptance;
pub mod config;
pub mod presets;
pub mod pricing;
pub mod report;
pub mod runner;
pub mod stats;
