//! Majority voting over k validated runs.
//!
//! Tuples are grouped by [`CategoricalKey`]; a key is kept when it occurs in
//! at least `threshold` runs, and its VA is the component-wise arithmetic
//! mean over every occurrence. With the default threshold `⌊k/2⌋ + 1` this is
//! a strict majority.

use indexmap::IndexMap;
use log::warn;

use crate::error::{Error, Result};
use crate::model::{tuple_key, CategoricalKey, PredictionRun, SentimentTuple, TaskKind, VAPair};

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusResult {
    /// Final prediction in first-appearance order.
    pub tuples: Vec<SentimentTuple>,
    /// Occurrence count for every key seen in any run, in first-appearance order.
    pub support: IndexMap<CategoricalKey, usize>,
    /// Number of runs voted over.
    pub k: usize,
    pub threshold: usize,
}

/// Smallest count strictly greater than `k / 2`.
pub fn default_threshold(k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::Domain("majority threshold undefined for k = 0".into()));
    }
    Ok(k / 2 + 1)
}

/// Order-independent mean, exact for identical inputs and bounded by the extremes.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let lo = values[0];
    let hi = values[values.len() - 1];
    let excess: f64 = values.iter().map(|v| v - lo).sum();
    (lo + excess / values.len() as f64).clamp(lo, hi)
}

pub fn aggregate(runs: &[PredictionRun], threshold: usize, task: TaskKind) -> Result<ConsensusResult> {
    if threshold == 0 {
        return Err(Error::Domain("threshold must be at least 1".into()));
    }
    if threshold > runs.len() {
        return Err(Error::Domain(format!(
            "threshold {threshold} exceeds the {} available runs",
            runs.len()
        )));
    }

    let mut groups: IndexMap<CategoricalKey, Vec<VAPair>> = IndexMap::new();
    for (run_index, run) in runs.iter().enumerate() {
        let mut in_run = std::collections::HashSet::new();
        for t in &run.tuples {
            let key = tuple_key(t, task)?;
            if !in_run.insert(key.clone()) {
                return Err(Error::Contract(format!(
                    "key {key} occurs twice in run {run_index}; deduplicate runs before voting"
                )));
            }
            groups.entry(key).or_default().push(t.va);
        }
    }

    let mut tuples = Vec::new();
    let mut support = IndexMap::with_capacity(groups.len());
    for (key, vas) in groups {
        let count = vas.len();
        if count >= threshold {
            let mut v: Vec<f64> = vas.iter().map(|p| p.valence).collect();
            let mut a: Vec<f64> = vas.iter().map(|p| p.arousal).collect();
            tuples.push(SentimentTuple {
                aspect: key.aspect.clone(),
                category: key.category.clone(),
                opinion: key.opinion.clone(),
                va: VAPair::new(stable_mean(&mut v), stable_mean(&mut a)),
            });
        }
        support.insert(key, count);
    }

    Ok(ConsensusResult { tuples, support, k: runs.len(), threshold })
}

/// How to vote when some of the k generations failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FailurePolicy {
    /// Fixed threshold; `None` recomputes the strict majority over the surviving runs.
    pub threshold: Option<usize>,
    /// Abort instead of voting over fewer runs.
    pub strict: bool,
}

/// Vote over the runs that succeeded (`None` marks a failed run).
pub fn aggregate_available(
    slots: &[Option<PredictionRun>],
    policy: FailurePolicy,
    task: TaskKind,
) -> Result<ConsensusResult> {
    let runs: Vec<PredictionRun> = slots.iter().flatten().cloned().collect();
    let failed = slots.len() - runs.len();
    if failed > 0 {
        if policy.strict {
            return Err(Error::Domain(format!("{failed} of {} runs failed (strict mode)", slots.len())));
        }
        warn!("{failed} of {} runs failed; voting over the remaining {}", slots.len(), runs.len());
    }
    if runs.is_empty() {
        return Ok(ConsensusResult { tuples: Vec::new(), support: IndexMap::new(), k: 0, threshold: 0 });
    }
    let threshold = match policy.threshold {
        Some(t) => t,
        None => default_threshold(runs.len())?,
    };
    aggregate(&runs, threshold, task)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::format_2dp;

    const ASTE: TaskKind = TaskKind::DimAste;

    fn t(a: &str, o: &str, v: f64, ar: f64) -> SentimentTuple {
        SentimentTuple::triplet(a, o, v, ar)
    }

    #[test]
    fn thresholds() {
        assert_eq!(default_threshold(1).unwrap(), 1);
        assert_eq!(default_threshold(5).unwrap(), 3);
        assert_eq!(default_threshold(10).unwrap(), 6);
        assert_eq!(default_threshold(15).unwrap(), 8);
        assert!(default_threshold(0).is_err());
        for k in 1..50 {
            let th = default_threshold(k).unwrap();
            assert!(2 * th > k && 2 * (th - 1) <= k && th <= k);
        }
    }

    #[test]
    fn two_run_toy() {
        let runs = vec![PredictionRun::new(vec![t("x", "y", 2.0, 2.0)]), PredictionRun::new(vec![t("x", "y", 4.0, 4.0)])];
        let r = aggregate(&runs, 2, ASTE).unwrap();
        assert_eq!(r.tuples, vec![t("x", "y", 3.0, 3.0)]);
        let r = aggregate(&runs, 1, ASTE).unwrap();
        assert_eq!(r.tuples.len(), 1);
    }

    #[test]
    fn threshold_bounds() {
        let runs = vec![PredictionRun::default(); 3];
        assert!(aggregate(&runs, 4, ASTE).is_err());
        assert!(aggregate(&runs, 0, ASTE).is_err());
        assert!(aggregate(&[], 1, ASTE).is_err());
        assert!(aggregate(&runs, 3, ASTE).unwrap().tuples.is_empty());
    }

    #[test]
    fn duplicate_key_in_run_is_contract_error() {
        let runs = vec![PredictionRun::new(vec![t("x", "y", 2.0, 2.0), t("x", "y", 3.0, 3.0)])];
        assert!(matches!(aggregate(&runs, 1, ASTE), Err(Error::Contract(_))));
    }

    #[test]
    fn midpoint_means_round_half_even() {
        let runs: Vec<PredictionRun> = [(5.53, 6.03), (5.40, 5.90), (5.70, 6.20), (5.55, 6.05)]
            .iter()
            .map(|&(v, a)| PredictionRun::new(vec![t("service", "spotty", v, a)]))
            .collect();
        let r = aggregate(&runs, 3, ASTE).unwrap();
        assert_eq!(format_2dp(r.tuples[0].va.valence), "5.54");
        assert_eq!(format_2dp(r.tuples[0].va.arousal), "6.04");
    }

    #[test]
    fn identical_values_mean_exactly() {
        let mut xs = vec![6.92; 7];
        assert_eq!(stable_mean(&mut xs), 6.92);
    }

    #[test]
    fn partial_failures() {
        let good = Some(PredictionRun::new(vec![t("x", "y", 2.0, 2.0)]));
        let slots = vec![good.clone(), None, good.clone(), None, None];
        // 2 survivors -> threshold 2
        let r = aggregate_available(&slots, FailurePolicy::default(), ASTE).unwrap();
        assert_eq!((r.k, r.threshold, r.tuples.len()), (2, 2, 1));
        let strict = FailurePolicy { strict: true, ..Default::default() };
        assert!(aggregate_available(&slots, strict, ASTE).is_err());
        let r = aggregate_available(&[None, None], FailurePolicy::default(), ASTE).unwrap();
        assert!(r.tuples.is_empty());
        let fixed = FailurePolicy { threshold: Some(3), strict: false };
        assert!(aggregate_available(&slots, fixed, ASTE).is_err());
    }
}
