//! Configuration, output and run orchestration behind the `fusekit` binary.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

pub use config::{parse_config, render, ConfigError, RunConfig, Seeds};
pub use run::{execute, render_table, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("seed {seed}: {source}")]
    Simulation {
        seed: u64,
        source: fusekit_core::Error,
    },
    #[error("metrics: {0}")]
    Metrics(fusekit_core::Error),
}
