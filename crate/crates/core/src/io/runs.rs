//! Per-run predictions, consensus predictions and vote-support sidecars.
//!
//! Runs file lines:
//! - `{"id": "...", "run": 0, "tuples": [...]}` for a validated run,
//! - `{"id": "...", "run": 1, "failed": true}` for a run that produced nothing usable,
//! - `{"id": "..."}` for an instance with no runs at all.
//!
//! Tuples use the canonical generation format with two-decimal VA strings.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::consensus::ConsensusResult;
use crate::error::{Error, Result};
use crate::model::{PredictionRun, SentimentTuple, TaskKind};
use crate::parser::canonical_value;

use super::dataset::{field, id_field, tuples_field, DatasetFile};

/// Runs per instance id, indexed by run; `None` marks a failed run.
pub type RunsByInstance = BTreeMap<String, Vec<Option<PredictionRun>>>;

/// Final tuples per instance id.
pub type PredictionsByInstance = BTreeMap<String, Vec<SentimentTuple>>;

fn push_line(out: &mut String, obj: Map<String, Value>) {
    out.push_str(&serde_json::to_string(&Value::Object(obj)).expect("JSON values serialize"));
    out.push('\n');
}

pub fn runs_to_string(runs: &RunsByInstance, task: TaskKind) -> Result<String> {
    let mut out = String::new();
    for (id, slots) in runs {
        if slots.is_empty() {
            let mut obj = Map::new();
            obj.insert("id".into(), json!(id));
            push_line(&mut out, obj);
        }
        for (i, slot) in slots.iter().enumerate() {
            let mut obj = Map::new();
            obj.insert("id".into(), json!(id));
            obj.insert("run".into(), json!(i));
            match slot {
                Some(run) => {
                    obj.insert("tuples".into(), canonical_value(&run.tuples, task)?);
                }
                None => {
                    obj.insert("failed".into(), json!(true));
                }
            }
            push_line(&mut out, obj);
        }
    }
    Ok(out)
}

pub fn save_runs(path: impl AsRef<Path>, runs: &RunsByInstance, task: TaskKind) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, runs_to_string(runs, task)?).map_err(|e| Error::io(path, e))
}

/// Parse a runs file; line order is irrelevant, but run indices must be contiguous from 0.
pub fn parse_runs(text: &str, path: &Path, task: TaskKind) -> Result<RunsByInstance> {
    let mut slots: BTreeMap<String, BTreeMap<usize, (usize, Option<PredictionRun>)>> = BTreeMap::new();
    let mut empty: BTreeMap<String, usize> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::data(path, lineno, m);
        let value: Value = serde_json::from_str(line).map_err(|e| bad(format!("malformed record: {e}")))?;
        let Value::Object(obj) = value else {
            return Err(bad("record is not a JSON object".into()));
        };
        let id = id_field(&obj).map_err(bad)?;
        let Some(run) = field(&obj, &["run"]) else {
            empty.insert(id, lineno);
            continue;
        };
        let run = run.as_u64().ok_or_else(|| bad(format!("instance {id}: run index is not a non-negative integer")))?
            as usize;
        let slot = if field(&obj, &["failed"]).and_then(Value::as_bool) == Some(true) {
            None
        } else {
            let tuples = field(&obj, &["tuples"]).ok_or_else(|| bad(format!("instance {id} run {run}: no tuples")))?;
            Some(PredictionRun::new(tuples_field(tuples, task).map_err(|m| bad(format!("instance {id} run {run}: {m}")))?))
        };
        if slots.entry(id.clone()).or_default().insert(run, (lineno, slot)).is_some() {
            return Err(bad(format!("instance {id}: run {run} appears twice")));
        }
    }

    let mut out = RunsByInstance::new();
    for (id, lineno) in empty {
        if let Some(runs) = slots.get(&id) {
            let first = runs.values().map(|(l, _)| *l).min().unwrap_or(lineno);
            return Err(Error::data(path, lineno.max(first), format!("instance {id} is listed both with and without runs")));
        }
        out.insert(id, Vec::new());
    }
    for (id, runs) in slots {
        let mut list = Vec::with_capacity(runs.len());
        for (expected, (run, (lineno, slot))) in runs.into_iter().enumerate() {
            if run != expected {
                return Err(Error::data(path, lineno, format!("instance {id}: run {expected} missing before run {run}")));
            }
            list.push(slot);
        }
        out.insert(id, list);
    }
    Ok(out)
}

pub fn load_runs(path: impl AsRef<Path>, task: TaskKind) -> Result<RunsByInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_runs(&text, path, task)
}

pub fn predictions_to_string(preds: &PredictionsByInstance, task: TaskKind) -> Result<String> {
    let mut out = String::new();
    for (id, tuples) in preds {
        let mut obj = Map::new();
        obj.insert("id".into(), json!(id));
        obj.insert("tuples".into(), canonical_value(tuples, task)?);
        push_line(&mut out, obj);
    }
    Ok(out)
}

pub fn save_predictions(path: impl AsRef<Path>, preds: &PredictionsByInstance, task: TaskKind) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, predictions_to_string(preds, task)?).map_err(|e| Error::io(path, e))
}

/// Load final predictions.
///
/// Accepts the canonical `{"id", "tuples"}` lines as well as dataset-format
/// records (`ID`, `Tuples` with compact VA), so a dataset file holding system
/// output can be scored directly. A record without tuples predicts nothing.
pub fn load_predictions(path: impl AsRef<Path>, task: TaskKind) -> Result<PredictionsByInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = PredictionsByInstance::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::data(path, i + 1, m);
        let value: Value = serde_json::from_str(line).map_err(|e| bad(format!("malformed record: {e}")))?;
        let Value::Object(obj) = value else {
            return Err(bad("record is not a JSON object".into()));
        };
        let id = id_field(&obj).map_err(bad)?;
        let tuples = match field(&obj, &["tuples", "triplet", "quadruplet"]) {
            None | Some(Value::Null) => Vec::new(),
            Some(v) => tuples_field(v, task).map_err(|m| bad(format!("instance {id}: {m}")))?,
        };
        if out.insert(id.clone(), tuples).is_some() {
            return Err(bad(format!("duplicate instance id {id:?}")));
        }
    }
    Ok(out)
}

/// Gold tuples per id; every instance must be annotated.
pub fn gold_map(dataset: &DatasetFile) -> Result<PredictionsByInstance> {
    dataset
        .instances
        .iter()
        .map(|inst| match &inst.gold {
            Some(g) => Ok((inst.id.clone(), g.clone())),
            None => Err(Error::Dataset(format!("instance {} has no gold tuples", inst.id))),
        })
        .collect()
}

/// Vote counts per instance, one line each, keys in first-appearance order.
pub fn support_to_string(results: &BTreeMap<String, ConsensusResult>) -> String {
    let mut out = String::new();
    for (id, r) in results {
        let support: Vec<Value> = r
            .support
            .iter()
            .map(|(key, count)| {
                let mut obj = Map::new();
                obj.insert("aspect".into(), json!(key.aspect));
                if let Some(c) = &key.category {
                    obj.insert("category".into(), json!(c));
                }
                obj.insert("opinion".into(), json!(key.opinion));
                obj.insert("count".into(), json!(count));
                obj.insert("kept".into(), json!(r.threshold > 0 && *count >= r.threshold));
                Value::Object(obj)
            })
            .collect();
        let mut obj = Map::new();
        obj.insert("id".into(), json!(id));
        obj.insert("k".into(), json!(r.k));
        obj.insert("threshold".into(), json!(r.threshold));
        obj.insert("support".into(), Value::Array(support));
        push_line(&mut out, obj);
    }
    out
}

pub fn save_support(path: impl AsRef<Path>, results: &BTreeMap<String, ConsensusResult>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, support_to_string(results)).map_err(|e| Error::io(path, e))
}
