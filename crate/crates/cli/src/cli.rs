use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dimabsa_core::io::Report;
use dimabsa_core::TaskKind;
use dimabsa_stats::{PipelineOptions, TVariant};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::pipeline::{cmd_aggregate, cmd_evaluate, cmd_infer, cmd_run, cmd_stats, make_endpoint};
use crate::score::{cmd_score, parse_labelled, save_outcome, ScoreRequest};

/// Self-consistency experiments for dimensional aspect-based sentiment analysis.
///
/// Exit codes: 0 success, 2 configuration, 3 data, 4 transport, 5 contract violation.
#[derive(Debug, Parser)]
#[command(name = "dimabsa", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Experiment config (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// Override the vote threshold for every k.
    #[arg(long)]
    pub threshold: Option<usize>,
    /// Abort when any generation failed instead of voting over fewer runs.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// Serve scripted generations from this fixture instead of the configured endpoint.
    #[arg(long, value_name = "FIXTURE")]
    pub mock_endpoint: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample k runs per instance and persist validated runs.
    Infer {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
    /// Majority-vote each cell's runs into final predictions.
    Aggregate {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Score each cell's predictions against gold.
    Evaluate {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare conditions across seeds and write the results table.
    Stats {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// infer, aggregate, evaluate and stats in sequence.
    Run {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        endpoint: EndpointArgs,
    },
    /// Score prediction files against a gold file and print the results table.
    Score {
        #[arg(long)]
        task: TaskKind,
        #[arg(long)]
        gold: PathBuf,
        /// Prediction file as LABEL=PATH; repeat a label once per seed.
        #[arg(long = "pred", required = true)]
        predictions: Vec<String>,
        #[arg(long, default_value = "-")]
        language: String,
        #[arg(long, default_value = "-")]
        domain: String,
        #[arg(long, default_value_t = dimabsa_stats::DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long)]
        welch: bool,
        /// Also write the table as JSON here (text table alongside).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(grid: &GridArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&grid.config)?;
    if grid.threshold.is_some() {
        cfg.threshold = grid.threshold;
    }
    cfg.strict |= grid.strict;
    cfg.validate()?;
    Ok(cfg)
}

/// Execute one command; returns the text printed to stdout.
pub fn execute(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Infer { grid, endpoint } => {
            let cfg = load(&grid)?;
            let summary = cmd_infer(&cfg, make_endpoint(&cfg, endpoint.mock_endpoint.as_deref())?)?;
            Ok(format!("{summary}\n"))
        }
        Command::Aggregate { grid } => {
            let summary = cmd_aggregate(&load(&grid)?)?;
            Ok(format!("aggregated {} cells\n", summary.cells))
        }
        Command::Evaluate { grid } => {
            let summary = cmd_evaluate(&load(&grid)?)?;
            Ok(format!("evaluated {} cells\n", summary.cells))
        }
        Command::Stats { grid } => Ok(cmd_stats(&load(&grid)?)?.render_table()),
        Command::Run { grid, endpoint } => {
            let cfg = load(&grid)?;
            let (summary, table) = cmd_run(&cfg, make_endpoint(&cfg, endpoint.mock_endpoint.as_deref())?)?;
            Ok(format!("{}\n{summary}\n", table.render_table()))
        }
        Command::Score { task, gold, predictions, language, domain, alpha, welch, out } => {
            let req = ScoreRequest {
                task,
                gold,
                predictions: predictions.iter().map(|p| parse_labelled(p)).collect(),
                language,
                domain,
                options: PipelineOptions { alpha, t_variant: if welch { TVariant::Welch } else { TVariant::Pooled } },
            };
            let outcome = cmd_score(&req)?;
            if let Some(path) = &out {
                save_outcome(&outcome, path)?;
            }
            let mut text = outcome.table.render_table();
            if let Some(sig) = &outcome.significance {
                text.push('\n');
                text.push_str(&sig.render_table());
            }
            Ok(text)
        }
    }
}
