//! Experiment harness for `dnls-core`: JSON configs, dispatch to the
//! library, CSV/JSON artifacts and parameter sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use run::{load_config, run, RunArtifacts, RunOutcome, Status};
pub use sweep::{sweep, GridSpec, SweepOutcome};

/// Sizes the global rayon pool from `DNLS_THREADS`, when set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("DNLS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("DNLS_THREADS must be a positive integer, got {value:?}")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
