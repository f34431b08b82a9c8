//! Command-line front end: configuration and the check suite.

pub mod config;
pub mod suite;

pub use config::RunConfig;
pub use suite::{ce_report, run_suite, Summary, CHECKS};
