//! Command implementations behind the `unimodal` binary.

pub mod config;
pub mod error;
pub mod fit;
pub mod ingest;
pub mod predict;
pub mod study;
pub mod summarize;

pub use error::CliError;
