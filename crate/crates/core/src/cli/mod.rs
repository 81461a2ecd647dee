//! Batch front end: configuration, initial data, commands and reports.

pub mod check;
pub mod commands;
pub mod config;
pub mod generators;

pub use check::{run_checks, CheckReport, PropertyResult};
pub use commands::{cmd_check, cmd_diagnose, cmd_init, cmd_step, diagnose, initial_state, load_state, run_step, save_state};
pub use config::{acceptance_config, Mode, RunConfig};
