//! Experiment runner for the `bansap` solvers.
//!
//! A TOML [`ExperimentConfig`] names a problem, a list of algorithms and a
//! Monte-Carlo budget. [`run_experiment`] fans the (algorithm, seed) pairs out
//! over a thread pool and gathers the per-slot series in a [`ResultTable`];
//! [`emit_outputs`] writes them as CSV together with a Vega-Lite plot spec.
//!
//! Seeds: run `i` uses `seed = base_seed + i`. The instance is drawn from
//! ChaCha8 stream 0 of that seed and the exploration directions from stream 1,
//! so no two runs, and no two roles within a run, share a random stream.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod synthetic;

pub use config::{AlgorithmSpec, ExperimentConfig, Instance, ProblemConfig, OUTPUT_DIR_ENV};
pub use error::{HarnessError, Result};
pub use experiment::{
    run_experiment, run_single, sweep, with_axis, Axis, ResultTable, RunFailure, RunResult,
};
pub use output::{emit_outputs, summarize, SummaryRow};
