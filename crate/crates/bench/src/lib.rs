//! Benchmark harness for the `mapf-core` portfolio: file formats, the
//! parallel portfolio runner, dataset export, reports and the CLI.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod report;
pub mod runner;

pub use error::{BenchError, Result};
