//! Library half of the `vilenkin` command-line tool: run configuration and
//! command implementations.

pub mod commands;
pub mod config;
