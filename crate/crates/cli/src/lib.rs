//! Command-line front end for the hybrid projection solver.

pub mod commands;
pub mod schema;
pub mod trace;

pub use commands::{run, Cli, Command};
