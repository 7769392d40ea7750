//! Command-line laboratory around `collarflow-core`: configuration, file
//! formats, initial data, the verification registry and the CLI.

pub mod cli;
pub mod config;
pub mod demos;
pub mod error;
pub mod initial;
pub mod io;
pub mod samples;
pub mod trials;
pub mod verify;

pub use error::CliError;
