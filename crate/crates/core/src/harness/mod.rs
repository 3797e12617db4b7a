//! Experiment orchestration: configuration, Monte Carlo replication, table
//! reproduction and CSV input/output.

pub mod config;
pub mod erdf_pipeline;
pub mod estimate;
pub mod experiment;
pub mod format;
pub mod report;
pub mod selfcheck;
pub mod tables;

pub use config::{ClustererSpec, ExperimentConfig, GridSpec};
pub use erdf_pipeline::erdf_pipeline;
pub use estimate::estimate_from_csv;
pub use experiment::{run_experiment, ExperimentReport};
pub use tables::reproduce_table;
