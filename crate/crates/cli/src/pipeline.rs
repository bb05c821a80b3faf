//! The experiment stages: infer → aggregate → evaluate → stats.
//!
//! Every stage reads its inputs from and writes its outputs to the layout
//! directory, so `run` is exactly the four stages in sequence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use dimabsa_client::{
    ChatEndpoint, ClientConfig, HttpEndpoint, HttpEndpointConfig, InferenceClient, MockEndpoint, PromptBuilder,
    PromptContent, PromptTemplate, ResponseCache, RetryPolicy, SampleJob, SamplingParams,
};
use dimabsa_core::io::{
    gold_map, load_dataset, load_predictions, load_runs, save_predictions, save_report, save_runs, save_support,
    DatasetFile, MetricTriple, PredictionsByInstance, ResultsTable, RunsByInstance,
};
use dimabsa_core::{aggregate_available, evaluate, parse_generation, CategoryWhitelist, FailurePolicy, PredictionRun, Validator, ValidatorConfig};
use dimabsa_stats::{subtask_significance, PipelineOptions, ScoreTable, TVariant};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{DatasetSpec, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::layout::{self, ensure_dir, require_file, Layout};

/// Counters reported after a command.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub network_calls: usize,
    pub cache_hits: usize,
    pub generations: usize,
    pub failed_generations: usize,
    pub cells: usize,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cells {}  generations {}  failed {}  network calls {}  cache hits {}",
            self.cells, self.generations, self.failed_generations, self.network_calls, self.cache_hits
        )
    }
}

/// Table label of the condition with `k` runs.
pub fn condition_label(k: usize) -> String {
    if k == 1 {
        "Baseline".into()
    } else {
        format!("SC-{k}")
    }
}

/// The remote endpoint from config, or a scripted one from a fixture file.
pub fn make_endpoint(cfg: &ExperimentConfig, mock: Option<&Path>) -> Result<Arc<dyn ChatEndpoint>> {
    if let Some(path) = mock {
        return Ok(Arc::new(MockEndpoint::from_file(path)?));
    }
    let base_url = cfg
        .endpoint
        .base_url
        .clone()
        .ok_or_else(|| CliError::Config("endpoint.base_url is not set (or pass --mock-endpoint)".into()))?;
    let api_key = match &cfg.endpoint.api_key_env {
        Some(var) => Some(std::env::var(var).map_err(|_| CliError::Config(format!("environment variable {var} is not set")))?),
        None => None,
    };
    let http = HttpEndpoint::new(HttpEndpointConfig {
        base_url,
        api_key,
        timeout: Duration::from_secs(cfg.endpoint.timeout_secs),
    })?;
    Ok(Arc::new(http))
}

fn whitelist(cfg: &ExperimentConfig, ds: &DatasetSpec) -> Result<Option<CategoryWhitelist>> {
    if !cfg.task.has_category() {
        return Ok(None);
    }
    let wl = match (&ds.categories, &ds.train) {
        (Some(path), _) => CategoryWhitelist::load(path)?,
        (None, Some(train)) => CategoryWhitelist::from_training(&load_dataset(train, cfg.task)?.instances)?,
        (None, None) => return Err(CliError::Config(format!("{}: no category whitelist source", ds.cell_name()))),
    };
    if wl.is_empty() {
        return Err(CliError::Config(format!("{}: category whitelist is empty", ds.cell_name())));
    }
    Ok(Some(wl.with_tags(ds.domain.clone(), ds.language.clone())))
}

fn load_instances(cfg: &ExperimentConfig, ds: &DatasetSpec) -> Result<DatasetFile> {
    Ok(load_dataset(&ds.path, cfg.task)?.with_tags(ds.language.clone(), ds.domain.clone()))
}

fn generations_to_string(gens: &BTreeMap<String, Vec<dimabsa_client::Generation>>, k: usize) -> String {
    let mut out = String::new();
    for (id, runs) in gens {
        for g in runs.iter().take(k) {
            let line = match &g.text {
                Some(t) => json!({"id": id, "run": g.run_index, "seed": g.seed, "text": t}),
                None => json!({"id": id, "run": g.run_index, "seed": g.seed, "failed": g.failure.clone().unwrap_or_default()}),
            };
            out.push_str(&line.to_string());
            out.push('\n');
        }
    }
    out
}

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Sample `max(k)` runs per instance and seed, then persist raw and validated runs for every k.
pub fn cmd_infer(cfg: &ExperimentConfig, endpoint: Arc<dyn ChatEndpoint>) -> Result<RunSummary> {
    let layout = Layout::new(&cfg.out, cfg.task);
    let retry = RetryPolicy {
        max_attempts: cfg.endpoint.max_attempts,
        base_delay: Duration::from_millis(cfg.endpoint.backoff_ms),
        max_delay: Duration::from_millis(cfg.endpoint.backoff_ms.saturating_mul(16)),
    };
    let mut client = InferenceClient::new(endpoint, ClientConfig { max_in_flight: cfg.endpoint.max_in_flight, retry })?;
    if let Some(dir) = &cfg.cache {
        client = client.with_cache(ResponseCache::new(dir));
    }
    let template = match &cfg.template {
        Some(p) => PromptTemplate::load(p)?,
        None => PromptTemplate::default(),
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Config(format!("async runtime: {e}")))?;

    let k_max = cfg.k_max();
    let mut summary = RunSummary::default();
    for ds in &cfg.datasets {
        let data = load_instances(cfg, ds)?;
        let wl = whitelist(cfg, ds)?;
        let labels: Vec<&str> = wl.iter().flat_map(|w| w.labels()).collect();
        let prompts = PromptBuilder::new(template.clone(), PromptContent::english_with_categories(cfg.task, &labels));
        let validator = Validator::new(cfg.task, wl.clone())?
            .with_config(ValidatorConfig { allow_placeholder: cfg.allow_placeholder });
        let jobs: Vec<SampleJob> = data
            .instances
            .iter()
            .map(|i| SampleJob { instance_id: i.id.clone(), prompt: prompts.build(i) })
            .collect();
        let texts: BTreeMap<&str, &str> = data.instances.iter().map(|i| (i.id.as_str(), i.text.as_str())).collect();

        for &seed in &cfg.seeds {
            let params = SamplingParams {
                model_name: cfg.endpoint.model.clone(),
                temperature: cfg.endpoint.temperature,
                seed: cfg.base_seed(seed),
                max_output_tokens: cfg.endpoint.max_output_tokens,
            };
            let batch = runtime.block_on(client.sample_batch(&jobs, k_max, &params))?;
            let gens: BTreeMap<String, Vec<dimabsa_client::Generation>> =
                jobs.iter().map(|j| j.instance_id.clone()).zip(batch).collect();

            let mut validated: BTreeMap<String, Vec<Option<PredictionRun>>> = BTreeMap::new();
            let mut rejected = 0;
            for (id, runs) in &gens {
                let slots = runs
                    .iter()
                    .map(|g| match &g.text {
                        None => Ok(None),
                        Some(t) => {
                            let parsed = parse_generation(t, cfg.task);
                            rejected += parsed.rejected.len();
                            Ok(Some(validator.validate(&parsed.tuples, texts[id.as_str()])?))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                summary.generations += runs.len();
                summary.failed_generations += runs.iter().filter(|g| !g.succeeded()).count();
                validated.insert(id.clone(), slots);
            }
            if rejected > 0 {
                info!("{} seed {seed}: {rejected} malformed tuple fragment(s) rejected", ds.cell_name());
            }

            for &k in &cfg.k_values {
                let dir = layout.cell_dir(ds, k, seed);
                ensure_dir(&dir)?;
                write(&dir.join(layout::GENERATIONS), &generations_to_string(&gens, k))?;
                let runs: RunsByInstance =
                    validated.iter().map(|(id, slots)| (id.clone(), slots[..k].to_vec())).collect();
                save_runs(dir.join(layout::RUNS), &runs, cfg.task)?;
                summary.cells += 1;
            }
        }
    }
    summary.network_calls = client.network_calls();
    summary.cache_hits = client.cache_hits();
    Ok(summary)
}

fn cells(cfg: &ExperimentConfig) -> Vec<(&DatasetSpec, usize, u64)> {
    cfg.datasets
        .iter()
        .flat_map(|ds| cfg.k_values.iter().flat_map(move |&k| cfg.seeds.iter().map(move |&s| (ds, k, s))))
        .collect()
}

fn aggregate_cell(cfg: &ExperimentConfig, layout: &Layout, ds: &DatasetSpec, k: usize, seed: u64) -> Result<()> {
    let dir = layout.cell_dir(ds, k, seed);
    let runs_path = dir.join(layout::RUNS);
    require_file(&runs_path, "infer")?;
    let runs = load_runs(&runs_path, cfg.task)?;
    let policy = FailurePolicy { threshold: cfg.threshold, strict: false };
    let mut results = BTreeMap::new();
    let mut preds = PredictionsByInstance::new();
    for (id, slots) in &runs {
        let failed = slots.iter().filter(|s| s.is_none()).count();
        if failed > 0 && cfg.strict {
            return Err(CliError::Transport(format!(
                "{} k{k} seed{seed}: {failed} of {} runs for instance {id} failed (strict mode)",
                ds.cell_name(),
                slots.len()
            )));
        }
        if failed == slots.len() {
            warn!("{} k{k} seed{seed}: every run for instance {id} failed; predicting nothing", ds.cell_name());
        }
        let r = aggregate_available(slots, policy, cfg.task)?;
        preds.insert(id.clone(), r.tuples.clone());
        results.insert(id.clone(), r);
    }
    save_predictions(dir.join(layout::PREDICTIONS), &preds, cfg.task)?;
    save_support(dir.join(layout::SUPPORT), &results)?;
    Ok(())
}

/// Majority vote over each cell's runs.
pub fn cmd_aggregate(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let layout = Layout::new(&cfg.out, cfg.task);
    let cells = cells(cfg);
    cells.par_iter().map(|&(ds, k, s)| aggregate_cell(cfg, &layout, ds, k, s)).collect::<Result<Vec<()>>>()?;
    Ok(RunSummary { cells: cells.len(), ..Default::default() })
}

/// Score each cell's consensus predictions against gold.
pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let layout = Layout::new(&cfg.out, cfg.task);
    let golds: BTreeMap<String, PredictionsByInstance> = cfg
        .datasets
        .iter()
        .map(|ds| Ok((ds.cell_name(), gold_map(&load_instances(cfg, ds)?)?)))
        .collect::<Result<_>>()?;
    let cells = cells(cfg);
    cells
        .par_iter()
        .map(|&(ds, k, seed)| {
            let dir = layout.cell_dir(ds, k, seed);
            let pred_path = dir.join(layout::PREDICTIONS);
            require_file(&pred_path, "aggregate")?;
            let preds = load_predictions(&pred_path, cfg.task)?;
            let report = evaluate(&preds, &golds[&ds.cell_name()], cfg.task)?;
            save_report(dir.join(layout::REPORT), &report)?;
            Ok(())
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(RunSummary { cells: cells.len(), ..Default::default() })
}

fn read_metrics(path: &Path) -> Result<MetricTriple> {
    require_file(path, "evaluate")?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let get = |name: &str| {
        v.get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| CliError::Data(format!("{}: no numeric {name}", path.display())))
    };
    Ok(MetricTriple { c_prec: get("c_prec")?, c_rec: get("c_rec")?, c_f1: get("c_f1")? })
}

/// Significance per dataset (one Holm family across the task) and the results table.
pub fn cmd_stats(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    let layout = Layout::new(&cfg.out, cfg.task);
    let ks = cfg.sorted_k();
    let conditions: Vec<String> = ks.iter().map(|&k| condition_label(k)).collect();
    let mut table = ResultsTable::new(cfg.task, conditions.clone());
    let mut score_tables = Vec::new();
    for ds in &cfg.datasets {
        let mut cells = Vec::with_capacity(ks.len());
        let mut f1 = Vec::with_capacity(ks.len());
        for &k in &ks {
            let per_seed = cfg
                .seeds
                .iter()
                .map(|&s| read_metrics(&layout.cell_file(ds, k, s, layout::REPORT)))
                .collect::<Result<Vec<_>>>()?;
            f1.push(per_seed.iter().map(|m| m.c_f1).collect::<Vec<_>>());
            cells.push(MetricTriple::mean(&per_seed));
        }
        table.push_row(ds.language.clone(), ds.domain.clone(), cells)?;
        score_tables.push(f1);
    }

    if cfg.seeds.len() < 3 || ks.len() < 2 {
        warn!("significance testing needs at least 2 conditions and 3 seeds; writing the table without marks");
    } else {
        let tables = score_tables
            .into_iter()
            .map(|s| ScoreTable::new(conditions.clone(), s))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let opts = PipelineOptions {
            alpha: cfg.alpha,
            t_variant: if cfg.welch { TVariant::Welch } else { TVariant::Pooled },
        };
        let reports = subtask_significance(&tables, opts)?;
        for (row, (ds, report)) in cfg.datasets.iter().zip(&reports).enumerate() {
            save_report(layout.dataset_dir(ds).join(layout::SIGNIFICANCE), report)?;
            table.apply_significance(row, report)?;
        }
    }
    ensure_dir(&layout.task_dir())?;
    save_report(layout.task_dir().join(layout::RESULTS), &table)?;
    Ok(table)
}

/// All four stages.
pub fn cmd_run(cfg: &ExperimentConfig, endpoint: Arc<dyn ChatEndpoint>) -> Result<(RunSummary, ResultsTable)> {
    let summary = cmd_infer(cfg, endpoint)?;
    cmd_aggregate(cfg)?;
    cmd_evaluate(cfg)?;
    let table = cmd_stats(cfg)?;
    Ok((summary, table))
}
