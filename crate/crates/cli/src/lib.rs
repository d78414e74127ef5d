//! Command-line driver for the `bousspec` solver: simulation runs, region
//! queries, verification suites and norm tools.

pub mod commands;
pub mod config;
pub mod error;
pub mod snapshot;
