//! Bootstrap percolation with non-uniform thresholds on templated multisection
//! random graphs.
//!
//! The crate is split along the lines of the workflow it supports:
//!
//! * [`template`] builds the cluster-level communication topology.
//! * [`tmgraph`] samples concrete graphs, thresholds and seed sets.
//! * [`analytic`] computes the critical seed size and bottleneck generation.
//! * [`engine`] simulates the percolation process (standard, coinflip and the
//!   two three-stage variants).
//! * [`intervention`] estimates the residual state of healthy vertices at an
//!   intervention point, builds the surrogate graph and predicts the outcome.
//! * `harness` (feature `harness`) drives reproducible experiment sweeps and
//!   backs the `tmperc` command line tool.

pub mod analytic;
pub mod binomial;
pub mod engine;
mod error;
pub mod intervention;
pub mod rng;
pub mod template;
pub mod tmgraph;

#[cfg(feature = "harness")]
pub mod harness;

pub use error::{Error, Result};
