//! Library side of the `mt` command: config loading and the subcommands.

pub mod commands;
pub mod config;

pub use commands::{cmd_analyze, cmd_optimize, cmd_plan, Outcome, RunOptions};
pub use config::{load_config, ConfigError, Problem, SceneConfig};
