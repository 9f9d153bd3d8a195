//! Command-line driver: JSON configuration, runs, connectivity estimates
//! and comparison sweeps.

pub mod commands;
pub mod config;
pub mod sweep;
