//! Command-line laboratory around `bosonlab-core`: run configuration, file
//! formats, statistics helpers and parallel experiment runners.

pub mod cli;
pub mod commands;
pub mod config;
pub mod io;
pub mod stats;
