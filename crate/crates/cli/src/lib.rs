//! Experiment pipelines for spatial preferential attachment graphs.
//!
//! The `spa` binary is a thin clap front end over this crate: every
//! subcommand maps to one stage function in [`pipeline`], and `spa run`
//! chains them as listed in an [`config::ExperimentConfig`].

// `!(x < y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod pipeline;
pub mod verify;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] spa_core::SpaError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing artifact {file} in {}: rerun the `{stage}` stage", dir.display())]
    MissingArtifact { file: String, stage: String, dir: PathBuf },

    #[error("stage {stage} failed: {source}")]
    Stage { stage: String, source: Box<CliError> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub use config::{preset, ExperimentConfig, LayoutSource, Step, VariantChoice, PRESET_NAMES};
pub use pipeline::{run_pipeline, PipelineOutcome, RunDir};
pub use verify::{verify, Check, Outcome, Tolerances, VerifyOptions, VerifyReport};
