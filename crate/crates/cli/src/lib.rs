//! Configuration, orchestration and output for the `flime` command.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod output;
pub mod run;
pub mod system;

use thiserror::Error;

pub use bench::{run_bench, run_bench_command, BenchRecord, Timing};
pub use config::{ConfigError, RunConfig};
pub use run::{run_compare, run_evolve, run_ness, run_spectrum};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failed: {0}")]
    Solver(#[from] flime_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 3 for solver
    /// failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            _ => 1,
        }
    }
}
