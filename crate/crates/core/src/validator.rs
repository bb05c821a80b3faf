//! Post-hoc filters for one parsed run: VA capping, span presence, category whitelist.
//!
//! Order is clamp → span → category, then within-run deduplication on the
//! categorical key (first occurrence wins).

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{normalize_category, normalize_span, tuple_key, PredictionRun, ReviewInstance, SentimentTuple, TaskKind};

/// Literal that marks an implicit (unstated) aspect or opinion.
pub const IMPLICIT_PLACEHOLDER: &str = "NULL";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidatorConfig {
    /// Exempt [`IMPLICIT_PLACEHOLDER`] spans from the span-presence check.
    pub allow_placeholder: bool,
}

impl Default for ValidatorConfig {
    fn default() -> Self {
        Self { allow_placeholder: true }
    }
}

/// Aspect categories a DimASQP prediction may use.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CategoryWhitelist {
    labels: BTreeSet<String>,
    pub domain: String,
    pub language: String,
}

impl CategoryWhitelist {
    pub fn new<I, S>(labels: I, domain: impl Into<String>, language: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            labels: labels
                .into_iter()
                .map(|s| normalize_category(s.as_ref()))
                .filter(|s| !s.is_empty())
                .collect(),
            domain: domain.into(),
            language: language.into(),
        }
    }

    /// Every gold category observed in `train`.
    pub fn from_training(train: &[ReviewInstance]) -> Result<Self> {
        let labels: BTreeSet<String> = train
            .iter()
            .flat_map(|inst| inst.gold.iter().flatten())
            .filter_map(|t| t.category.as_deref().map(normalize_category))
            .collect();
        if labels.is_empty() {
            return Err(Error::Config("training data carries no gold categories".into()));
        }
        Ok(Self { labels, ..Default::default() })
    }

    pub fn with_tags(mut self, domain: impl Into<String>, language: impl Into<String>) -> Self {
        self.domain = domain.into();
        self.language = language.into();
        self
    }

    pub fn contains(&self, category: &str) -> bool {
        self.labels.contains(&normalize_category(category))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// One uppercase label per line, sorted.
    pub fn to_text(&self) -> String {
        self.labels.iter().map(|l| format!("{l}\n")).collect()
    }

    /// Parse the one-label-per-line format; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Self {
        Self::new(
            text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')),
            "",
            "",
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_text(&text))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn clamp_va(t: &SentimentTuple) -> SentimentTuple {
    SentimentTuple { va: t.va.clamped(), ..t.clone() }
}

fn span_present(span: &str, text: &str, cfg: ValidatorConfig) -> bool {
    let span = normalize_span(span);
    if cfg.allow_placeholder && span == IMPLICIT_PLACEHOLDER {
        return true;
    }
    !span.is_empty() && text.contains(span)
}

/// Keep tuples whose aspect and opinion both occur verbatim in `text`.
pub fn filter_spans(tuples: &[SentimentTuple], text: &str, cfg: ValidatorConfig) -> Vec<SentimentTuple> {
    tuples
        .iter()
        .filter(|t| span_present(&t.aspect, text, cfg) && span_present(&t.opinion, text, cfg))
        .cloned()
        .collect()
}

/// Keep DimASQP tuples whose category is whitelisted; DimASTE input passes unchanged.
pub fn filter_categories(
    tuples: &[SentimentTuple],
    whitelist: &CategoryWhitelist,
    task: TaskKind,
) -> Result<Vec<SentimentTuple>> {
    if !task.has_category() {
        return Ok(tuples.to_vec());
    }
    if whitelist.is_empty() {
        return Err(Error::Config("empty category whitelist for DimASQP".into()));
    }
    Ok(tuples
        .iter()
        .filter(|t| t.category.as_deref().is_some_and(|c| whitelist.contains(c)))
        .cloned()
        .collect())
}

fn dedup_by_key(tuples: Vec<SentimentTuple>, task: TaskKind) -> Result<Vec<SentimentTuple>> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(tuples.len());
    for t in tuples {
        if seen.insert(tuple_key(&t, task)?) {
            out.push(t);
        }
    }
    Ok(out)
}

/// Full validation of one run against its review text.
pub fn validate_run(
    tuples: &[SentimentTuple],
    review_text: &str,
    whitelist: Option<&CategoryWhitelist>,
    task: TaskKind,
    cfg: ValidatorConfig,
) -> Result<PredictionRun> {
    let clamped: Vec<SentimentTuple> = tuples.iter().map(clamp_va).collect();
    let spans = filter_spans(&clamped, review_text, cfg);
    let kept = if task.has_category() {
        let wl = whitelist.ok_or_else(|| Error::Config("DimASQP validation needs a category whitelist".into()))?;
        filter_categories(&spans, wl, task)?
    } else {
        spans
    };
    Ok(PredictionRun::new(dedup_by_key(kept, task)?))
}

/// Validation settings bound to one task.
#[derive(Debug, Clone)]
pub struct Validator {
    pub task: TaskKind,
    pub whitelist: Option<CategoryWhitelist>,
    pub config: ValidatorConfig,
}

impl Validator {
    pub fn new(task: TaskKind, whitelist: Option<CategoryWhitelist>) -> Result<Self> {
        if task.has_category() && whitelist.as_ref().is_none_or(CategoryWhitelist::is_empty) {
            return Err(Error::Config("DimASQP validation needs a non-empty category whitelist".into()));
        }
        Ok(Self { task, whitelist, config: ValidatorConfig::default() })
    }

    pub fn with_config(mut self, config: ValidatorConfig) -> Self {
        self.config = config;
        self
    }

    pub fn validate(&self, tuples: &[SentimentTuple], review_text: &str) -> Result<PredictionRun> {
        validate_run(tuples, review_text, self.whitelist.as_ref(), self.task, self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VAPair;

    const TEXT: &str = "Decor is nice though service can be spotty.";

    fn wl() -> CategoryWhitelist {
        CategoryWhitelist::new(["AMBIENCE#GENERAL", "SERVICE#GENERAL"], "restaurant", "eng")
    }

    #[test]
    fn clamp_examples() {
        let t = SentimentTuple::triplet("x", "y", 9.5, 0.2);
        assert_eq!(clamp_va(&t).va, VAPair::new(9.0, 1.0));
        let t = SentimentTuple::triplet("x", "y", 7.0, 7.17);
        assert_eq!(clamp_va(&t), t);
    }

    #[test]
    fn span_filter() {
        let cfg = ValidatorConfig::default();
        let keep = SentimentTuple::triplet("Decor", "nice", 7.0, 7.0);
        let case = SentimentTuple::triplet("decor", "nice", 7.0, 7.0);
        let implicit = SentimentTuple::triplet("NULL", "nice", 7.0, 7.0);
        let hallucinated = SentimentTuple::triplet("food", "tasty", 7.0, 7.0);
        let out = filter_spans(&[keep.clone(), case, implicit.clone(), hallucinated], TEXT, cfg);
        assert_eq!(out, vec![keep.clone(), implicit.clone()]);
        let strict = ValidatorConfig { allow_placeholder: false };
        assert_eq!(filter_spans(&[keep.clone(), implicit], TEXT, strict), vec![keep]);
    }

    #[test]
    fn category_filter() {
        let task = TaskKind::DimAsqp;
        let ok = SentimentTuple::quadruplet("Decor", "AMBIENCE#GENERAL", "nice", 7.0, 7.0);
        let lower = SentimentTuple::quadruplet("Decor", "ambience#general", "nice", 7.0, 7.0);
        let bad = SentimentTuple::quadruplet("Decor", "FOOD#PRICES", "nice", 7.0, 7.0);
        let out = filter_categories(&[ok.clone(), bad, lower.clone()], &wl(), task).unwrap();
        assert_eq!(out, vec![ok, lower]);
        let empty = CategoryWhitelist::default();
        assert!(matches!(filter_categories(&[], &empty, task), Err(Error::Config(_))));
    }

    #[test]
    fn category_filter_noop_for_triplets() {
        let t = vec![SentimentTuple::triplet("Decor", "nice", 7.0, 7.0)];
        assert_eq!(filter_categories(&t, &CategoryWhitelist::default(), TaskKind::DimAste).unwrap(), t);
    }

    #[test]
    fn whitelist_from_training() {
        let inst = |id: &str, cats: &[&str]| ReviewInstance {
            id: id.into(),
            text: TEXT.into(),
            gold: Some(cats.iter().map(|c| SentimentTuple::quadruplet("Decor", *c, "nice", 7.0, 7.0)).collect()),
        };
        let train = vec![
            inst("1", &["AMBIENCE#GENERAL", "SERVICE#GENERAL"]),
            inst("2", &["service#general"]),
        ];
        let wl = CategoryWhitelist::from_training(&train).unwrap();
        assert_eq!(wl.labels().collect::<Vec<_>>(), vec!["AMBIENCE#GENERAL", "SERVICE#GENERAL"]);
        let none = vec![ReviewInstance { id: "1".into(), text: TEXT.into(), gold: Some(vec![]) }];
        assert!(matches!(CategoryWhitelist::from_training(&none), Err(Error::Config(_))));
    }

    #[test]
    fn whitelist_text_format() {
        let wl = CategoryWhitelist::from_text("# comment\nservice#general\n\nAMBIENCE#GENERAL\n");
        assert_eq!(wl.to_text(), "AMBIENCE#GENERAL\nSERVICE#GENERAL\n");
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("wl.txt");
        wl.save(&p).unwrap();
        assert_eq!(CategoryWhitelist::load(&p).unwrap().labels, wl.labels);
    }

    #[test]
    fn validate_worked_example_run_one() {
        let run = vec![
            SentimentTuple::triplet("Decor", "nice", 6.92, 7.13),
            SentimentTuple::triplet("service", "spotty", 5.53, 6.03),
        ];
        let out = validate_run(&run, TEXT, None, TaskKind::DimAste, ValidatorConfig::default()).unwrap();
        assert_eq!(out.tuples, run);
    }

    #[test]
    fn validate_composes_filters() {
        let run = vec![
            SentimentTuple::triplet("Decor", "nice", 9.4, 0.5),
            SentimentTuple::triplet("waiter", "rude", 3.0, 6.0),
        ];
        let out = validate_run(&run, TEXT, None, TaskKind::DimAste, ValidatorConfig::default()).unwrap();
        assert_eq!(out.tuples, vec![SentimentTuple::triplet("Decor", "nice", 9.0, 1.0)]);
    }

    #[test]
    fn validate_dedups_keeping_first() {
        let run = vec![
            SentimentTuple::triplet("Decor", "nice", 6.0, 6.0),
            SentimentTuple::triplet("Decor ", "nice", 8.0, 8.0),
        ];
        let out = validate_run(&run, TEXT, None, TaskKind::DimAste, ValidatorConfig::default()).unwrap();
        assert_eq!(out.tuples, vec![run[0].clone()]);
    }

    #[test]
    fn validate_empty_and_asqp_requirements() {
        let cfg = ValidatorConfig::default();
        assert!(validate_run(&[], TEXT, None, TaskKind::DimAste, cfg).unwrap().is_empty());
        assert!(validate_run(&[], TEXT, None, TaskKind::DimAsqp, cfg).is_err());
        assert!(Validator::new(TaskKind::DimAsqp, None).is_err());
        let v = Validator::new(TaskKind::DimAsqp, Some(wl())).unwrap();
        let run = vec![SentimentTuple::quadruplet("service", "SERVICE#GENERAL", "spotty", 7.0, 7.0)];
        assert_eq!(v.validate(&run, TEXT).unwrap().tuples, run);
    }
}
