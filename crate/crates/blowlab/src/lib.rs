//! Std companion of `blowlab-core`: run configuration files, snapshot and
//! summary formats, sweep reports and the `blowlab` command line.

pub mod audit;
pub mod config;
pub mod io;
pub mod report;
pub mod sweep;
