//! Continuous precision, recall and F1 over valence-arousal tuples.
//!
//! A prediction earns credit only when its categorical key equals a gold
//! key; the credit is `1 - d² / 128`, where `d²` is the squared VA distance.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{tuple_key, va_sq_distance, CategoricalKey, SentimentTuple, TaskKind, VA_MAX_SQ_DISTANCE};

/// Groups at most this large are matched by exhaustive search.
pub const EXHAUSTIVE_GROUP_MAX: usize = 6;

/// Continuous true-positive credit for a key-matched pair.
pub fn ctp(pred: &SentimentTuple, gold: &SentimentTuple, task: TaskKind) -> Result<f64> {
    let (kp, kg) = (tuple_key(pred, task)?, tuple_key(gold, task)?);
    if kp != kg {
        return Err(Error::Contract(format!("cTP requested for mismatched keys {kp} and {kg}")));
    }
    if !pred.va.in_range() || !gold.va.in_range() {
        return Err(Error::Contract(format!("cTP requested for out-of-range VA on key {kp}")));
    }
    Ok(ctp_unchecked(pred, gold))
}

fn ctp_unchecked(pred: &SentimentTuple, gold: &SentimentTuple) -> f64 {
    1.0 - va_sq_distance(pred.va, gold.va) / VA_MAX_SQ_DISTANCE
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub pred: usize,
    pub gold: usize,
    pub ctp: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchAssignment {
    /// Sorted by prediction index.
    pub pairs: Vec<MatchPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gold: Vec<usize>,
}

impl MatchAssignment {
    pub fn total_ctp(&self) -> f64 {
        sorted_sum(self.pairs.iter().map(|p| p.ctp))
    }
}

fn sorted_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

/// Best one-to-one assignment in one key group, as (pred slot, gold slot) pairs.
fn assign_group(scores: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let np = scores.len();
    let ng = scores.first().map_or(0, Vec::len);
    if np == 0 || ng == 0 {
        return Vec::new();
    }
    if np.max(ng) <= EXHAUSTIVE_GROUP_MAX {
        exhaustive(scores, np, ng)
    } else {
        greedy(scores, np, ng)
    }
}

fn exhaustive(scores: &[Vec<f64>], np: usize, ng: usize) -> Vec<(usize, usize)> {
    // Assign each slot on the smaller side to a distinct slot on the larger side.
    let transpose = np > ng;
    let (small, large) = if transpose { (ng, np) } else { (np, ng) };
    let score = |s: usize, l: usize| if transpose { scores[l][s] } else { scores[s][l] };

    #[allow(clippy::too_many_arguments)]
    fn search(
        s: usize,
        small: usize,
        large: usize,
        score: &dyn Fn(usize, usize) -> f64,
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        acc: f64,
        best: &mut (f64, Vec<usize>),
    ) {
        if s == small {
            if best.1.is_empty() || acc > best.0 {
                *best = (acc, current.clone());
            }
            return;
        }
        for l in 0..large {
            if !used[l] {
                used[l] = true;
                current.push(l);
                search(s + 1, small, large, score, used, current, acc + score(s, l), best);
                current.pop();
                used[l] = false;
            }
        }
    }

    let mut best = (f64::NEG_INFINITY, Vec::new());
    search(0, small, large, &score, &mut vec![false; large], &mut Vec::with_capacity(small), 0.0, &mut best);
    best.1
        .into_iter()
        .enumerate()
        .map(|(s, l)| if transpose { (l, s) } else { (s, l) })
        .collect()
}

fn greedy(scores: &[Vec<f64>], np: usize, ng: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (0..np).flat_map(|p| (0..ng).map(move |g| (p, g))).collect();
    cells.sort_by(|&(p1, g1), &(p2, g2)| scores[p2][g2].total_cmp(&scores[p1][g1]).then((p1, g1).cmp(&(p2, g2))));
    let (mut pu, mut gu) = (vec![false; np], vec![false; ng]);
    let mut out = Vec::new();
    for (p, g) in cells {
        if !pu[p] && !gu[g] {
            pu[p] = true;
            gu[g] = true;
            out.push((p, g));
        }
    }
    out
}

/// Pair predictions with golds of one instance, maximizing total cTP within each key group.
pub fn match_instance(preds: &[SentimentTuple], golds: &[SentimentTuple], task: TaskKind) -> Result<MatchAssignment> {
    let mut groups: IndexMap<CategoricalKey, (Vec<usize>, Vec<usize>)> = IndexMap::new();
    for (i, t) in preds.iter().enumerate() {
        groups.entry(tuple_key(t, task)?).or_default().0.push(i);
    }
    for (i, t) in golds.iter().enumerate() {
        groups.entry(tuple_key(t, task)?).or_default().1.push(i);
    }

    let mut pairs = Vec::new();
    let mut pred_used = vec![false; preds.len()];
    let mut gold_used = vec![false; golds.len()];
    for (key, (pi, gi)) in &groups {
        for t in pi.iter().map(|&i| &preds[i]).chain(gi.iter().map(|&i| &golds[i])) {
            if !t.va.in_range() {
                return Err(Error::Contract(format!("out-of-range VA in group {key}; validate before scoring")));
            }
        }
        let scores: Vec<Vec<f64>> =
            pi.iter().map(|&p| gi.iter().map(|&g| ctp_unchecked(&preds[p], &golds[g])).collect()).collect();
        for (ps, gs) in assign_group(&scores) {
            let (p, g) = (pi[ps], gi[gs]);
            pred_used[p] = true;
            gold_used[g] = true;
            pairs.push(MatchPair { pred: p, gold: g, ctp: scores[ps][gs] });
        }
    }
    pairs.sort_by_key(|p| p.pred);
    let unused = |used: &[bool]| used.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i).collect();
    Ok(MatchAssignment { pairs, unmatched_pred: unused(&pred_used), unmatched_gold: unused(&gold_used) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEval {
    pub id: String,
    pub n_pred: usize,
    pub n_gold: usize,
    pub assignment: MatchAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: TaskKind,
    pub c_prec: f64,
    pub c_rec: f64,
    pub c_f1: f64,
    pub n_pred: usize,
    pub n_gold: usize,
    pub sum_ctp: f64,
    /// Sorted by instance id.
    pub instances: Vec<InstanceEval>,
}

/// Precision, recall and F1 from summed credit; any zero denominator yields 0.
pub fn prf(sum_ctp: f64, n_pred: usize, n_gold: usize) -> (f64, f64, f64) {
    let p = if n_pred == 0 { 0.0 } else { sum_ctp / n_pred as f64 };
    let r = if n_gold == 0 { 0.0 } else { sum_ctp / n_gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Score predictions against gold; both maps must cover the same instance ids.
pub fn evaluate(
    preds: &BTreeMap<String, Vec<SentimentTuple>>,
    golds: &BTreeMap<String, Vec<SentimentTuple>>,
    task: TaskKind,
) -> Result<EvalReport> {
    let missing: Vec<&str> = golds.keys().filter(|k| !preds.contains_key(*k)).map(String::as_str).collect();
    let extra: Vec<&str> = preds.keys().filter(|k| !golds.contains_key(*k)).map(String::as_str).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = String::from("prediction and gold instance ids differ");
        if !missing.is_empty() {
            msg.push_str(&format!("; missing predictions for [{}]", missing.join(", ")));
        }
        if !extra.is_empty() {
            msg.push_str(&format!("; no gold for [{}]", extra.join(", ")));
        }
        return Err(Error::Dataset(msg));
    }

    let mut instances = Vec::with_capacity(golds.len());
    let mut credits = Vec::new();
    let (mut n_pred, mut n_gold) = (0, 0);
    for (id, gold) in golds {
        let pred = &preds[id];
        let assignment = match_instance(pred, gold, task)?;
        credits.extend(assignment.pairs.iter().map(|p| p.ctp));
        n_pred += pred.len();
        n_gold += gold.len();
        instances.push(InstanceEval { id: id.clone(), n_pred: pred.len(), n_gold: gold.len(), assignment });
    }
    let sum_ctp = sorted_sum(credits.into_iter());
    let (c_prec, c_rec, c_f1) = prf(sum_ctp, n_pred, n_gold);
    Ok(EvalReport { task, c_prec, c_rec, c_f1, n_pred, n_gold, sum_ctp, instances })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ASTE: TaskKind = TaskKind::DimAste;

    fn t(a: &str, o: &str, v: f64, ar: f64) -> SentimentTuple {
        SentimentTuple::triplet(a, o, v, ar)
    }

    fn one(id: &str, ts: Vec<SentimentTuple>) -> BTreeMap<String, Vec<SentimentTuple>> {
        BTreeMap::from([(id.to_string(), ts)])
    }

    #[test]
    fn ctp_boundaries() {
        assert_eq!(ctp(&t("a", "b", 7.0, 7.17), &t("a", "b", 7.0, 7.17), ASTE).unwrap(), 1.0);
        assert_eq!(ctp(&t("a", "b", 1.0, 1.0), &t("a", "b", 9.0, 9.0), ASTE).unwrap(), 0.0);
        assert!((ctp(&t("a", "b", 5.0, 5.0), &t("a", "b", 7.0, 7.0), ASTE).unwrap() - 0.9375).abs() < 1e-12);
        assert!(matches!(ctp(&t("a", "b", 5.0, 5.0), &t("a", "c", 5.0, 5.0), ASTE), Err(Error::Contract(_))));
        assert!(ctp(&t("a", "b", 9.5, 5.0), &t("a", "b", 5.0, 5.0), ASTE).is_err());
    }

    #[test]
    fn table_one_quadruplets_match_perfectly() {
        let golds = vec![
            SentimentTuple::quadruplet("Decor", "AMBIENCE#GENERAL", "nice", 7.0, 7.17),
            SentimentTuple::quadruplet("service", "SERVICE#GENERAL", "spotty", 7.0, 7.0),
        ];
        let m = match_instance(&golds, &golds, TaskKind::DimAsqp).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert!(m.pairs.iter().all(|p| p.ctp == 1.0));
        assert!(m.unmatched_pred.is_empty() && m.unmatched_gold.is_empty());
    }

    #[test]
    fn empty_predictions() {
        let m = match_instance(&[], &[t("a", "b", 5.0, 5.0), t("c", "d", 5.0, 5.0)], ASTE).unwrap();
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_gold, vec![0, 1]);
    }

    #[test]
    fn near_pairs_with_near() {
        let preds = [t("a", "b", 2.0, 2.0), t("a", "b", 8.0, 8.0)];
        let golds = [t("a", "b", 7.5, 7.5), t("a", "b", 2.5, 2.5)];
        let m = match_instance(&preds, &golds, ASTE).unwrap();
        let pairs: Vec<(usize, usize)> = m.pairs.iter().map(|p| (p.pred, p.gold)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        assert!((m.total_ctp() - 2.0 * (1.0 - 0.5 / 128.0)).abs() < 1e-12);
    }

    #[test]
    fn greedy_path_on_large_groups() {
        let preds: Vec<_> = (0..8).map(|i| t("a", "b", 1.0 + i as f64, 5.0)).collect();
        let golds: Vec<_> = (0..8).rev().map(|i| t("a", "b", 1.0 + i as f64, 5.0)).collect();
        let m = match_instance(&preds, &golds, ASTE).unwrap();
        assert_eq!(m.pairs.len(), 8);
        assert!(m.pairs.iter().all(|p| p.ctp == 1.0 && p.gold == 7 - p.pred));
    }

    #[test]
    fn evaluate_examples() {
        let gold = one("1", vec![t("a", "b", 5.0, 5.0)]);
        let r = evaluate(&gold, &gold, ASTE).unwrap();
        assert_eq!((r.c_prec, r.c_rec, r.c_f1), (1.0, 1.0, 1.0));

        let pred = one("1", vec![t("a", "b", 5.0, 5.0), t("x", "y", 5.0, 5.0)]);
        let r = evaluate(&pred, &gold, ASTE).unwrap();
        assert_eq!((r.c_prec, r.c_rec), (0.5, 1.0));
        assert!((r.c_f1 - 2.0 / 3.0).abs() < 1e-12);

        let pred = one("1", vec![t("a", "b", 7.0, 7.0)]);
        let r = evaluate(&pred, &gold, ASTE).unwrap();
        for x in [r.c_prec, r.c_rec, r.c_f1] {
            assert!((x - 0.9375).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_denominators() {
        assert_eq!(prf(0.0, 0, 0), (0.0, 0.0, 0.0));
        assert_eq!(prf(0.0, 3, 0), (0.0, 0.0, 0.0));
        let gold = one("1", vec![]);
        let r = evaluate(&gold, &gold, ASTE).unwrap();
        assert_eq!(r.c_f1, 0.0);
    }

    #[test]
    fn id_mismatch_lists_ids() {
        let a = one("1", vec![]);
        let b = one("2", vec![]);
        let msg = evaluate(&a, &b, ASTE).unwrap_err().to_string();
        assert!(msg.contains("[2]") && msg.contains("[1]"), "{msg}");
    }
}
