//! Command-line harness: configuration, seeded replicates, trace and metrics
//! files, and comparison tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
