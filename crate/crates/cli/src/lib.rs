//! Command-line front end: expression parser, run configuration and subcommands.

pub mod commands;
pub mod config;
pub mod expr;
pub mod plot;
