//! Experiment driver behind the `tmperc` binary.

pub mod config;
pub mod emit;
pub mod experiments;
pub mod validate;

pub use config::ExperimentConfig;
pub use emit::{Cell, Format, Kind, Table};

/// Run `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = jobs {
        builder = builder.num_threads(jobs);
    }
    Ok(builder.build()?.install(f))
}
