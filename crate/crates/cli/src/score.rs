//! Scoring user-supplied prediction files against a gold file.
//!
//! Each prediction file is labelled with a condition name. Files sharing a
//! label are treated as seeds of that condition and averaged; with at least
//! two conditions and three seeds each, the significance marks are filled in.

use std::path::{Path, PathBuf};

use dimabsa_core::io::{gold_map, load_dataset, load_predictions, save_report, MetricTriple, ResultsTable};
use dimabsa_core::{evaluate, EvalReport, TaskKind};
use dimabsa_stats::{significance_pipeline, PipelineOptions, ScoreTable, SignificanceReport};
use indexmap::IndexMap;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct ScoreRequest {
    pub task: TaskKind,
    pub gold: PathBuf,
    /// `(condition label, prediction file)` in table order.
    pub predictions: Vec<(String, PathBuf)>,
    pub language: String,
    pub domain: String,
    pub options: PipelineOptions,
}

#[derive(Debug, Clone)]
pub struct ScoreOutcome {
    pub reports: Vec<(String, PathBuf, EvalReport)>,
    pub significance: Option<SignificanceReport>,
    pub table: ResultsTable,
}

/// `LABEL=PATH`, or a bare path labelled by its file stem.
pub fn parse_labelled(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let label = path.file_stem().map_or_else(|| arg.to_string(), |s| s.to_string_lossy().into_owned());
            (label, path)
        }
    }
}

pub fn cmd_score(req: &ScoreRequest) -> Result<ScoreOutcome> {
    if req.predictions.is_empty() {
        return Err(CliError::Config("no prediction files given".into()));
    }
    let gold = gold_map(&load_dataset(&req.gold, req.task)?)?;
    let mut by_label: IndexMap<String, Vec<MetricTriple>> = IndexMap::new();
    let mut reports = Vec::new();
    for (label, path) in &req.predictions {
        let preds = load_predictions(path, req.task)?;
        let report = evaluate(&preds, &gold, req.task)?;
        by_label.entry(label.clone()).or_default().push(MetricTriple::from(&report));
        reports.push((label.clone(), path.clone(), report));
    }

    let conditions: Vec<String> = by_label.keys().cloned().collect();
    let mut table = ResultsTable::new(req.task, conditions.clone());
    table.push_row(req.language.clone(), req.domain.clone(), by_label.values().map(|v| MetricTriple::mean(v)).collect())?;

    let seeds: Vec<usize> = by_label.values().map(Vec::len).collect();
    let testable = conditions.len() >= 2 && seeds.iter().all(|&n| n >= 3 && n == seeds[0]);
    let significance = if testable {
        let scores = by_label.values().map(|v| v.iter().map(|m| m.c_f1).collect()).collect();
        let report = significance_pipeline(&ScoreTable::new(conditions, scores)?, req.options)?;
        table.apply_significance(0, &report)?;
        Some(report)
    } else {
        None
    };
    Ok(ScoreOutcome { reports, significance, table })
}

/// Persist the table at `path` and, when present, the significance report next to it.
pub fn save_outcome(outcome: &ScoreOutcome, path: &Path) -> Result<()> {
    save_report(path, &outcome.table)?;
    if let Some(sig) = &outcome.significance {
        let stem = path.file_stem().map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
        save_report(path.with_file_name(format!("{stem}.significance.json")), sig)?;
    }
    Ok(())
}
