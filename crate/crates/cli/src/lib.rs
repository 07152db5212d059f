//! Library surface of the command-line workflow: configuration loading,
//! file formats, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod io;
