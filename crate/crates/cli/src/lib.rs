//! Configuration parsing and execution behind the `chiprobe` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_with, schema_help, Command, ConfigError, EngineChoice, RunConfig};
pub use run::{execute, peak_exp2f, RunError, RunSummary, EXIT_COMPUTE, EXIT_CONFIG, EXIT_IO, EXIT_OK};
