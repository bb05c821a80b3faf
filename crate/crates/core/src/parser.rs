//! Parsing raw model generations into tuples, and the canonical output format.
//!
//! The canonical format is one JSON array of flat objects:
//!
//! ```text
//! [{"aspect":"Decor","opinion":"nice","valence":"6.91","arousal":"7.22"}]
//! ```
//!
//! with a `category` key between `aspect` and `opinion` for DimASQP. Input is
//! parsed leniently: numbers may be literals or numeric strings, a Markdown
//! code fence is stripped, and if the whole text is not valid JSON every
//! balanced `{...}` fragment is parsed on its own.

use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::decimal::format_2dp;
use crate::error::Result;
use crate::model::{SentimentTuple, TaskKind, VAPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    MissingField(&'static str),
    BadNumber(&'static str),
    NotAnObject,
    Truncated,
}

impl RejectReason {
    /// Machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::MissingField(_) => "missing-field",
            RejectReason::BadNumber(_) => "bad-number",
            RejectReason::NotAnObject => "not-an-object",
            RejectReason::Truncated => "truncated",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::MissingField(field) | RejectReason::BadNumber(field) => {
                write!(f, "{}: {field}", self.code())
            }
            _ => f.write_str(self.code()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub fragment: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    pub tuples: Vec<SentimentTuple>,
    pub rejected: Vec<Rejection>,
}

impl ParseReport {
    pub fn fully_parsed(&self) -> bool {
        self.rejected.is_empty()
    }

    fn take(&mut self, fragment: impl FnOnce() -> String, value: &Value, task: TaskKind) {
        match tuple_from_value(value, task) {
            Ok(t) => self.tuples.push(t),
            Err(reason) => self.rejected.push(Rejection { fragment: fragment(), reason }),
        }
    }

    fn reject(&mut self, fragment: &str, reason: RejectReason) {
        self.rejected.push(Rejection { fragment: fragment.to_string(), reason });
    }
}

/// Parse arbitrary bytes; invalid UTF-8 sequences are replaced first.
pub fn parse_generation_bytes(bytes: &[u8], task: TaskKind) -> ParseReport {
    parse_generation(&String::from_utf8_lossy(bytes), task)
}

/// Parse a raw generation. Never fails: malformed regions are reported in
/// [`ParseReport::rejected`].
pub fn parse_generation(text: &str, task: TaskKind) -> ParseReport {
    let mut report = ParseReport::default();
    let body = strip_code_fence(text.trim());
    if body.is_empty() {
        report.reject(text, RejectReason::Truncated);
        return report;
    }
    match serde_json::from_str::<Value>(body) {
        Ok(Value::Array(items)) => {
            for item in &items {
                report.take(|| item.to_string(), item, task);
            }
        }
        Ok(obj @ Value::Object(_)) => report.take(|| body.to_string(), &obj, task),
        Ok(_) => report.reject(body, RejectReason::NotAnObject),
        Err(_) => salvage(body, task, &mut report),
    }
    report
}

fn strip_code_fence(s: &str) -> &str {
    let Some(rest) = s.strip_prefix("```") else {
        return s;
    };
    // drop the info string ("json") on the opening fence line
    let rest = rest.find('\n').map_or("", |i| &rest[i + 1..]);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Parse every top-level balanced object fragment independently.
fn salvage(body: &str, task: TaskKind, report: &mut ParseReport) {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    let mut start = 0usize;
    let mut gap_start = 0usize;

    for (i, c) in body.char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => {
                if depth == 0 {
                    flush_gap(&body[gap_start..i], report);
                    start = i;
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    let fragment = &body[start..=i];
                    match serde_json::from_str::<Value>(fragment) {
                        Ok(v) => report.take(|| fragment.to_string(), &v, task),
                        Err(_) => report.reject(fragment, RejectReason::NotAnObject),
                    }
                    gap_start = i + 1;
                }
            }
            _ => {}
        }
    }
    if depth > 0 {
        report.reject(&body[start..], RejectReason::Truncated);
    } else {
        flush_gap(&body[gap_start..], report);
    }
}

/// Text between object fragments is fine if it is only array punctuation.
fn flush_gap(gap: &str, report: &mut ParseReport) {
    let junk = gap.trim_matches(|c: char| c.is_whitespace() || matches!(c, '[' | ']' | ','));
    if !junk.is_empty() {
        report.reject(junk, RejectReason::NotAnObject);
    }
}

fn field<'a>(obj: &'a Map<String, Value>, names: &[&str]) -> Option<&'a Value> {
    for name in names {
        if let Some(v) = obj.get(*name) {
            return Some(v);
        }
    }
    obj.iter()
        .find(|(k, _)| names.iter().any(|n| k.eq_ignore_ascii_case(n)))
        .map(|(_, v)| v)
}

fn text_field(obj: &Map<String, Value>, names: &[&str], label: &'static str) -> std::result::Result<String, RejectReason> {
    match field(obj, names) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        _ => Err(RejectReason::MissingField(label)),
    }
}

/// A finite number given either as a JSON number or as a numeric string.
pub fn number_value(v: &Value) -> Option<f64> {
    let x = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse::<f64>().ok()?,
        _ => return None,
    };
    x.is_finite().then_some(x)
}

fn va_from(obj: &Map<String, Value>) -> std::result::Result<VAPair, RejectReason> {
    let valence = field(obj, &["valence"]);
    let arousal = field(obj, &["arousal"]);
    match (valence, arousal) {
        (Some(v), Some(a)) => {
            let v = number_value(v).ok_or(RejectReason::BadNumber("valence"))?;
            let a = number_value(a).ok_or(RejectReason::BadNumber("arousal"))?;
            Ok(VAPair::new(v, a))
        }
        (None, None) => match field(obj, &["va"]) {
            Some(Value::String(s)) => parse_compact_va(s).ok_or(RejectReason::BadNumber("va")),
            Some(Value::Object(inner)) => va_from(inner),
            Some(_) => Err(RejectReason::BadNumber("va")),
            None => Err(RejectReason::MissingField("valence")),
        },
        (None, _) => Err(RejectReason::MissingField("valence")),
        (_, None) => Err(RejectReason::MissingField("arousal")),
    }
}

/// `"7.00#7.17"` → `(7.00, 7.17)`.
pub fn parse_compact_va(s: &str) -> Option<VAPair> {
    let (v, a) = s.split_once('#')?;
    let v = v.trim().parse::<f64>().ok()?;
    let a = a.trim().parse::<f64>().ok()?;
    (v.is_finite() && a.is_finite()).then_some(VAPair::new(v, a))
}

/// Convert one JSON value in the canonical object shape into a tuple.
pub fn tuple_from_value(v: &Value, task: TaskKind) -> std::result::Result<SentimentTuple, RejectReason> {
    let Value::Object(obj) = v else {
        return Err(RejectReason::NotAnObject);
    };
    let aspect = text_field(obj, &["aspect", "aspect_term"], "aspect")?;
    let category = if task.has_category() {
        Some(text_field(obj, &["category", "aspect_category"], "category")?)
    } else {
        None
    };
    let opinion = text_field(obj, &["opinion", "opinion_term"], "opinion")?;
    let va = va_from(obj)?;
    Ok(SentimentTuple { aspect, category, opinion, va })
}

#[derive(Serialize)]
struct CanonicalTuple<'a> {
    aspect: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    category: Option<&'a str>,
    opinion: &'a str,
    valence: String,
    arousal: String,
}

pub(crate) fn canonical_value(tuples: &[SentimentTuple], task: TaskKind) -> Result<Value> {
    let body = serialize_tuples(tuples, task)?;
    Ok(serde_json::from_str(&body).expect("canonical output is valid JSON"))
}

/// Render tuples in the canonical format, VA as two-decimal strings.
pub fn serialize_tuples(tuples: &[SentimentTuple], task: TaskKind) -> Result<String> {
    let rows = tuples
        .iter()
        .map(|t| {
            t.check_shape(task)?;
            Ok(CanonicalTuple {
                aspect: &t.aspect,
                category: t.category.as_deref(),
                opinion: &t.opinion,
                valence: format_2dp(t.va.valence),
                arousal: format_2dp(t.va.arousal),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string(&rows).expect("serializing strings cannot fail"))
}
