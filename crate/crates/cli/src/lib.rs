//! Experiment runner for the `funcrate` command.

pub mod config;
pub mod constants;
pub mod report;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Mode};
pub use run::{run, RunReport, DEGENERATE};

/// Worker count from `FUNCRATE_THREADS`; results never depend on it.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("FUNCRATE_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}
