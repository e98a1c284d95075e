//! Experiment harness: configuration, problem assembly, reconstruction
//! dispatch, hyper-parameter sweeps, iteration-truncation studies, and
//! serialization of images, traces, and metric tables.

pub mod commands;
pub mod config;
pub mod io;
pub mod run;

use std::path::PathBuf;

pub use commands::{cmd_iterstudy, cmd_metrics, cmd_phantom, cmd_reconstruct, cmd_sweep};
pub use config::{ExperimentConfig, SolverKind};
pub use run::{assemble, reconstruct, Problem, RunRecord, RUN_RECORD_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("refusing to overwrite {path} written under a different config (use --force)", path = .path.display())]
    HashMismatch { path: PathBuf },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl HarnessError {
    /// CLI exit code: 2 for usage/config problems, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
