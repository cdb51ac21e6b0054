//! Command-line runner for the calorix toolkit: configuration, tasks and
//! report writing.

pub mod config;
pub mod error;
pub mod report;
pub mod tasks;

pub use config::{ExperimentConfig, TaskName};
pub use error::CliError;
pub use report::{Check, TaskReport};
pub use tasks::{run_task, task_catalog};
