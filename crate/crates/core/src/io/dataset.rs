//! Line-oriented dataset files.
//!
//! One JSON object per line:
//! `{"ID": "...", "Text": "...", "Tuples": [{"Aspect", "Category"?, "Opinion", "VA"}]}`.
//! VA is either `"7.00#7.17"` or `{"valence": 7.0, "arousal": 7.17}`.
//! `Triplet` and `Quadruplet` are accepted as aliases of `Tuples`; a record
//! without any of them has no gold annotation.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use log::warn;
use serde_json::{json, Map, Value};

use crate::decimal::format_2dp;
use crate::error::{Error, Result};
use crate::model::{ReviewInstance, SentimentTuple, TaskKind};
use crate::parser::tuple_from_value;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub task: TaskKind,
    pub language: String,
    pub domain: String,
    pub instances: Vec<ReviewInstance>,
}

impl DatasetFile {
    pub fn with_tags(mut self, language: impl Into<String>, domain: impl Into<String>) -> Self {
        self.language = language.into();
        self.domain = domain.into();
        self
    }

    pub fn tuple_count(&self) -> usize {
        self.instances.iter().map(|i| i.gold.as_ref().map_or(0, Vec::len)).sum()
    }
}

/// Converter from a foreign on-disk format into review instances.
pub trait DatasetAdapter {
    fn read(&self, path: &Path, task: TaskKind) -> Result<Vec<ReviewInstance>>;
}

/// The native JSON-lines format.
#[derive(Debug, Clone, Copy, Default)]
pub struct JsonLines;

impl DatasetAdapter for JsonLines {
    fn read(&self, path: &Path, task: TaskKind) -> Result<Vec<ReviewInstance>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let value: Value =
                serde_json::from_str(line).map_err(|e| Error::data(path, i + 1, format!("malformed record: {e}")))?;
            out.push(record_to_instance(&value, task).map_err(|m| Error::data(path, i + 1, m))?);
        }
        Ok(out)
    }
}

pub(crate) fn field<'a>(obj: &'a Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    obj.iter().find(|(k, _)| names.iter().any(|n| k.eq_ignore_ascii_case(n))).map(|(_, v)| v)
}

pub(crate) fn id_field(obj: &Map<String, Value>) -> std::result::Result<String, String> {
    match field(obj, &["id"]) {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err("missing or empty ID".into()),
    }
}

/// Parse a tuple list, checking VA range.
pub(crate) fn tuples_field(value: &Value, task: TaskKind) -> std::result::Result<Vec<SentimentTuple>, String> {
    let Value::Array(items) = value else {
        return Err("tuple list is not an array".into());
    };
    items
        .iter()
        .enumerate()
        .map(|(j, item)| {
            if !task.has_category() && item.as_object().and_then(|o| field(o, &["category", "aspect_category"])).is_some_and(|v| !v.is_null()) {
                return Err(format!("tuple {j}: category present in {task} data"));
            }
            let t = tuple_from_value(item, task).map_err(|r| format!("tuple {j}: {}", r.code()))?;
            if !t.va.in_range() {
                return Err(format!(
                    "tuple {j}: VA ({}, {}) outside [1, 9]",
                    t.va.valence, t.va.arousal
                ));
            }
            Ok(t)
        })
        .collect()
}

fn record_to_instance(value: &Value, task: TaskKind) -> std::result::Result<ReviewInstance, String> {
    let Value::Object(obj) = value else {
        return Err("record is not a JSON object".into());
    };
    let id = id_field(obj)?;
    let text = match field(obj, &["text"]) {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        _ => return Err(format!("instance {id}: missing or empty Text")),
    };
    let gold = match field(obj, &["tuples", "triplet", "quadruplet"]) {
        None | Some(Value::Null) => None,
        Some(v) => Some(tuples_field(v, task).map_err(|m| format!("instance {id}: {m}"))?),
    };
    Ok(ReviewInstance { id, text, gold })
}

pub fn load_dataset(path: impl AsRef<Path>, task: TaskKind) -> Result<DatasetFile> {
    load_dataset_with(path, task, &JsonLines)
}

/// Load through `adapter`, then enforce id uniqueness.
pub fn load_dataset_with(path: impl AsRef<Path>, task: TaskKind, adapter: &dyn DatasetAdapter) -> Result<DatasetFile> {
    let path = path.as_ref();
    let instances = adapter.read(path, task)?;
    let mut seen = HashSet::new();
    for (i, inst) in instances.iter().enumerate() {
        if !seen.insert(inst.id.as_str()) {
            return Err(Error::data(path, i + 1, format!("duplicate instance id {:?}", inst.id)));
        }
    }
    if instances.is_empty() {
        warn!("{}: dataset is empty", path.display());
    }
    Ok(DatasetFile { task, language: String::new(), domain: String::new(), instances })
}

fn tuple_record(t: &SentimentTuple) -> Value {
    let mut obj = Map::new();
    obj.insert("Aspect".into(), json!(t.aspect));
    if let Some(c) = &t.category {
        obj.insert("Category".into(), json!(c));
    }
    obj.insert("Opinion".into(), json!(t.opinion));
    obj.insert("VA".into(), json!(format!("{}#{}", format_2dp(t.va.valence), format_2dp(t.va.arousal))));
    Value::Object(obj)
}

/// Serialize instances in the native format, VA in compact form.
pub fn dataset_to_string(instances: &[ReviewInstance], task: TaskKind) -> Result<String> {
    let mut out = String::new();
    for inst in instances {
        let mut obj = Map::new();
        obj.insert("ID".into(), json!(inst.id));
        obj.insert("Text".into(), json!(inst.text));
        if let Some(gold) = &inst.gold {
            for t in gold {
                t.check_shape(task)?;
            }
            obj.insert("Tuples".into(), Value::Array(gold.iter().map(tuple_record).collect()));
        }
        out.push_str(&serde_json::to_string(&Value::Object(obj)).expect("JSON values serialize"));
        out.push('\n');
    }
    Ok(out)
}

pub fn save_dataset(path: impl AsRef<Path>, instances: &[ReviewInstance], task: TaskKind) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(instances, task)?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VAPair;

    fn write(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let p = dir.path().join("data.jsonl");
        fs::write(&p, body).unwrap();
        p
    }

    const TABLE_ONE: &str = r#"{"ID":"r1","Text":"Decor is nice though service can be spotty.","Tuples":[{"Aspect":"Decor","Category":"AMBIENCE#GENERAL","Opinion":"nice","VA":"7.00#7.17"},{"Aspect":"service","Category":"SERVICE#GENERAL","Opinion":"spotty","VA":{"valence":7.0,"arousal":"7.00"}}]}"#;

    #[test]
    fn loads_both_va_forms() {
        let dir = tempfile::tempdir().unwrap();
        let d = load_dataset(write(&dir, TABLE_ONE), TaskKind::DimAsqp).unwrap();
        let gold = d.instances[0].gold.as_ref().unwrap();
        assert_eq!(gold.len(), 2);
        assert_eq!(gold[0].va, VAPair::new(7.0, 7.17));
        assert_eq!(gold[1].va, VAPair::new(7.0, 7.0));
        assert_eq!(d.tuple_count(), 2);
    }

    #[test]
    fn category_in_triplet_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(write(&dir, TABLE_ONE), TaskKind::DimAste).unwrap_err();
        assert!(matches!(err, Error::Data { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let d = load_dataset(write(&dir, ""), TaskKind::DimAste).unwrap();
        assert!(d.instances.is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let ok = r#"{"ID":"a","Text":"x y"}"#;
        let cases = [
            format!("{ok}\n{ok}"),
            format!("{ok}\n{{\"ID\":\"b\",\"Text\":\"x\""),
            format!("{ok}\n{{\"ID\":\"b\",\"Text\":\"x\",\"Tuples\":[{{\"Aspect\":\"x\",\"Opinion\":\"x\",\"VA\":\"7#oops\"}}]}}"),
            format!("{ok}\n{{\"ID\":\"b\",\"Text\":\"x\",\"Tuples\":[{{\"Aspect\":\"x\",\"Opinion\":\"x\",\"VA\":\"9.5#5\"}}]}}"),
            format!("{ok}\n{{\"ID\":\"b\",\"Text\":\"\"}}"),
        ];
        for body in cases {
            match load_dataset(write(&dir, &body), TaskKind::DimAste) {
                Err(Error::Data { line, .. }) => assert_eq!(line, 2, "{body}"),
                other => panic!("expected data error for {body}: {other:?}"),
            }
        }
    }

    #[test]
    fn asqp_requires_category() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"ID":"a","Text":"x y","Tuples":[{"Aspect":"x","Opinion":"y","VA":"5#5"}]}"#;
        assert!(matches!(load_dataset(write(&dir, body), TaskKind::DimAsqp), Err(Error::Data { line: 1, .. })));
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let d = load_dataset(write(&dir, TABLE_ONE), TaskKind::DimAsqp).unwrap();
        let p = dir.path().join("out.jsonl");
        save_dataset(&p, &d.instances, TaskKind::DimAsqp).unwrap();
        let again = load_dataset(&p, TaskKind::DimAsqp).unwrap();
        assert_eq!(again.instances, d.instances);
    }
}
