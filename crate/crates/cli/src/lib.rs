//! Configuration, experiment driver and file output for the `wavelab`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod svg;

pub use commands::{check, convergence, run, sweep, CliError, RunReport};
pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
