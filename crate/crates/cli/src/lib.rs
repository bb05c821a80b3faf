//! Experiment grid runner: infer, aggregate, evaluate and compare
//! self-consistency conditions.

pub mod cli;
pub mod config;
pub mod error;
pub mod layout;
pub mod pipeline;
pub mod score;

pub use cli::{execute, Cli};
pub use config::ExperimentConfig;
pub use error::{exit, CliError, Result};
pub use pipeline::{cmd_aggregate, cmd_evaluate, cmd_infer, cmd_run, cmd_stats, condition_label, make_endpoint, RunSummary};
pub use score::{cmd_score, ScoreOutcome, ScoreRequest};
