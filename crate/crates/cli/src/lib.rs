//! Command-line pipeline for `thinsieve`: configuration, orbit caching and
//! the JSON/CSV artifacts of each step.

pub mod artifact;
pub mod commands;
pub mod config;

pub use config::{Overrides, RunConfig};
