//! Synthetic experiments exercising implicit differentiation at desk scale.
//!
//! Each experiment builds a seeded synthetic instance, runs inner (and
//! possibly outer) solvers from `idiff`, and returns a [`CsvTable`] plus run
//! metadata. The `idiff-bench` binary wraps them in a CLI.

pub mod cli;
pub mod config;
pub mod data;
mod error;
pub mod experiments;
pub mod rng;
pub mod table;

pub use config::{Condition, Experiment, ExperimentConfig, SolverKind};
pub use error::{BenchError, BenchResult};
pub use experiments::{run, RunOutput};
pub use table::CsvTable;
