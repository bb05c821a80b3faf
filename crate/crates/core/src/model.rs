//! Domain types shared across the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VA_MIN: f64 = 1.0;
pub const VA_MAX: f64 = 9.0;

/// Largest possible squared distance between two in-range VA pairs: `8² + 8²`.
pub const VA_MAX_SQ_DISTANCE: f64 = (VA_MAX - VA_MIN) * (VA_MAX - VA_MIN) * 2.0;

/// Valence and arousal on the 1–9 scale, held at full precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VAPair {
    pub valence: f64,
    pub arousal: f64,
}

impl VAPair {
    pub const fn new(valence: f64, arousal: f64) -> Self {
        Self { valence, arousal }
    }

    pub fn in_range(&self) -> bool {
        (VA_MIN..=VA_MAX).contains(&self.valence) && (VA_MIN..=VA_MAX).contains(&self.arousal)
    }

    pub fn clamped(self) -> Self {
        Self {
            valence: self.valence.clamp(VA_MIN, VA_MAX),
            arousal: self.arousal.clamp(VA_MIN, VA_MAX),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    /// Triplets: aspect, opinion, VA.
    #[serde(rename = "DimASTE")]
    DimAste,
    /// Quadruplets: aspect, category, opinion, VA.
    #[serde(rename = "DimASQP")]
    DimAsqp,
}

impl TaskKind {
    pub fn has_category(self) -> bool {
        matches!(self, TaskKind::DimAsqp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::DimAste => "DimASTE",
            TaskKind::DimAsqp => "DimASQP",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dimaste" | "aste" => Ok(TaskKind::DimAste),
            "dimasqp" | "asqp" => Ok(TaskKind::DimAsqp),
            other => Err(Error::Config(format!("unknown task {other:?} (expected DimASTE or DimASQP)"))),
        }
    }
}

/// One extracted opinion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentTuple {
    pub aspect: String,
    /// Present exactly for DimASQP.
    pub category: Option<String>,
    pub opinion: String,
    pub va: VAPair,
}

impl SentimentTuple {
    pub fn triplet(aspect: impl Into<String>, opinion: impl Into<String>, valence: f64, arousal: f64) -> Self {
        Self {
            aspect: aspect.into(),
            category: None,
            opinion: opinion.into(),
            va: VAPair::new(valence, arousal),
        }
    }

    pub fn quadruplet(
        aspect: impl Into<String>,
        category: impl Into<String>,
        opinion: impl Into<String>,
        valence: f64,
        arousal: f64,
    ) -> Self {
        Self {
            aspect: aspect.into(),
            category: Some(category.into()),
            opinion: opinion.into(),
            va: VAPair::new(valence, arousal),
        }
    }

    pub fn check_shape(&self, task: TaskKind) -> Result<()> {
        match (task, &self.category) {
            (TaskKind::DimAste, Some(c)) => Err(Error::Shape {
                task,
                detail: format!("unexpected category {c:?}"),
            }),
            (TaskKind::DimAsqp, None) => Err(Error::Shape {
                task,
                detail: format!("missing category for ({}, {})", self.aspect, self.opinion),
            }),
            _ => Ok(()),
        }
    }

    pub fn key(&self, task: TaskKind) -> Result<CategoricalKey> {
        tuple_key(self, task)
    }
}

/// An input sentence with its optional gold annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewInstance {
    pub id: String,
    pub text: String,
    pub gold: Option<Vec<SentimentTuple>>,
}

/// Validated tuples from one stochastic generation of one instance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionRun {
    pub tuples: Vec<SentimentTuple>,
}

impl PredictionRun {
    pub fn new(tuples: Vec<SentimentTuple>) -> Self {
        Self { tuples }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// Identity of a tuple for voting and matching: its non-VA fields.
///
/// Spans are trimmed and compared case-sensitively; categories are trimmed
/// and uppercased.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategoricalKey {
    pub aspect: String,
    pub category: Option<String>,
    pub opinion: String,
}

impl fmt::Display for CategoricalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.category {
            Some(c) => write!(f, "({}, {}, {})", self.aspect, c, self.opinion),
            None => write!(f, "({}, {})", self.aspect, self.opinion),
        }
    }
}

pub fn normalize_span(s: &str) -> &str {
    s.trim()
}

pub fn normalize_category(s: &str) -> String {
    s.trim().to_uppercase()
}

pub fn tuple_key(t: &SentimentTuple, task: TaskKind) -> Result<CategoricalKey> {
    t.check_shape(task)?;
    Ok(CategoricalKey {
        aspect: normalize_span(&t.aspect).to_string(),
        category: t.category.as_deref().map(normalize_category),
        opinion: normalize_span(&t.opinion).to_string(),
    })
}

/// `(V_p - V_g)² + (A_p - A_g)²`.
pub fn va_sq_distance(p: VAPair, g: VAPair) -> f64 {
    let dv = p.valence - g.valence;
    let da = p.arousal - g.arousal;
    dv * dv + da * da
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triplet_key() {
        let t = SentimentTuple::triplet("Decor", "nice", 6.92, 7.13);
        let k = tuple_key(&t, TaskKind::DimAste).unwrap();
        assert_eq!(k.aspect, "Decor");
        assert_eq!(k.opinion, "nice");
        assert_eq!(k.category, None);
        assert_eq!(k.to_string(), "(Decor, nice)");
    }

    #[test]
    fn quadruplet_key() {
        let t = SentimentTuple::quadruplet("service", "SERVICE#GENERAL", "spotty", 7.0, 7.0);
        let k = tuple_key(&t, TaskKind::DimAsqp).unwrap();
        assert_eq!(k.to_string(), "(service, SERVICE#GENERAL, spotty)");
    }

    #[test]
    fn key_ignores_va() {
        let a = SentimentTuple::triplet("Decor", "nice", 6.92, 7.13);
        let b = SentimentTuple::triplet("Decor", "nice", 2.0, 8.5);
        assert_eq!(tuple_key(&a, TaskKind::DimAste).unwrap(), tuple_key(&b, TaskKind::DimAste).unwrap());
    }

    #[test]
    fn key_normalization() {
        let a = SentimentTuple::quadruplet(" Decor ", "ambience#general", "nice", 5.0, 5.0);
        let b = SentimentTuple::quadruplet("Decor", "AMBIENCE#GENERAL", "nice\t", 5.0, 5.0);
        let c = SentimentTuple::quadruplet("decor", "AMBIENCE#GENERAL", "nice", 5.0, 5.0);
        let task = TaskKind::DimAsqp;
        assert_eq!(tuple_key(&a, task).unwrap(), tuple_key(&b, task).unwrap());
        assert_ne!(tuple_key(&a, task).unwrap(), tuple_key(&c, task).unwrap());
    }

    #[test]
    fn shape_mismatch() {
        let quad = SentimentTuple::quadruplet("a", "X#Y", "b", 5.0, 5.0);
        let trip = SentimentTuple::triplet("a", "b", 5.0, 5.0);
        assert!(matches!(tuple_key(&quad, TaskKind::DimAste), Err(Error::Shape { .. })));
        assert!(matches!(tuple_key(&trip, TaskKind::DimAsqp), Err(Error::Shape { .. })));
    }

    #[test]
    fn distance_examples() {
        let p = VAPair::new(7.0, 7.17);
        assert_eq!(va_sq_distance(p, p), 0.0);
        assert_eq!(va_sq_distance(VAPair::new(1.0, 1.0), VAPair::new(9.0, 9.0)), 128.0);
        assert_eq!(va_sq_distance(VAPair::new(5.0, 5.0), VAPair::new(7.0, 7.0)), 8.0);
        assert_eq!(VA_MAX_SQ_DISTANCE, 128.0);
    }

    #[test]
    fn task_parsing() {
        assert_eq!("DimASTE".parse::<TaskKind>().unwrap(), TaskKind::DimAste);
        assert_eq!("asqp".parse::<TaskKind>().unwrap(), TaskKind::DimAsqp);
        assert!("absa".parse::<TaskKind>().is_err());
        assert_eq!(serde_json::to_string(&TaskKind::DimAsqp).unwrap(), "\"DimASQP\"");
    }

    fn va() -> impl Strategy<Value = VAPair> {
        (1.0f64..=9.0, 1.0f64..=9.0).prop_map(|(v, a)| VAPair::new(v, a))
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_bounded(p in va(), g in va()) {
            let d = va_sq_distance(p, g);
            prop_assert_eq!(d, va_sq_distance(g, p));
            prop_assert!((0.0..=VA_MAX_SQ_DISTANCE).contains(&d));
        }

        #[test]
        fn partition_by_key_preserves_multiset(
            items in prop::collection::vec((0u8..4, 0u8..4, 1.0f64..9.0), 0..30)
        ) {
            let tuples: Vec<SentimentTuple> = items
                .iter()
                .map(|(a, o, v)| SentimentTuple::triplet(format!("a{a}"), format!("o{o}"), *v, *v))
                .collect();
            let mut groups: indexmap::IndexMap<CategoricalKey, Vec<SentimentTuple>> = Default::default();
            for t in &tuples {
                groups.entry(tuple_key(t, TaskKind::DimAste).unwrap()).or_default().push(t.clone());
            }
            let flat: Vec<SentimentTuple> = groups.into_values().flatten().collect();
            prop_assert_eq!(flat.len(), tuples.len());
            for t in &tuples {
                let want = tuples.iter().filter(|u| *u == t).count();
                let got = flat.iter().filter(|u| *u == t).count();
                prop_assert_eq!(want, got);
            }
        }
    }
}
