//! Experiment harness: configuration, stimulus manifests, the four
//! experiments and their CSV, JSON and SVG reports.

pub mod config;
pub mod emit;
pub mod error;
pub mod experiments;
pub mod manifest;
pub mod svg;

pub use config::{ExperimentConfig, ExperimentKind, LoadedConfig};
pub use error::{HarnessError, Result};
pub use experiments::{run_config, Run};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "GRIDPROBE_THREADS";

/// Sizes the global thread pool from `GRIDPROBE_THREADS` when it is set.
///
/// Has no effect once the pool exists.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| HarnessError::Config(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
