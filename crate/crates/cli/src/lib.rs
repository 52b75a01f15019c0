//! Config-driven experiment runner: each run writes `summary.json` plus
//! comma-separated tables and exits 0 (all checks pass), 1 (a check failed)
//! or 2 (bad configuration).

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiments::run_experiment;
pub use report::{RunReport, Verdict};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
