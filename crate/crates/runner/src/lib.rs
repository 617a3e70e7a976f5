//! Experiment orchestration for `critevo`: configuration files, run
//! directories, CSV logs, checkpoints and the command-line interface.
//!
//! Every run writes into `<out>/<experiment>/<run_id>/` a copy of its fully
//! resolved config (`config.toml`) and seed (`seed.toml`) next to its CSV
//! tables. Tables start with a `#schema=v1` line. Rerunning the same config
//! and seed reproduces every table byte for byte, whatever the thread count.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod table;

pub use artifacts::RunOptions;
pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{Result, RunnerError};
pub use experiments::{replay, run_experiment};
