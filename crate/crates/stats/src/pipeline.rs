//! Gatekept comparison of experimental conditions.
//!
//! Per condition a Shapiro–Wilk check; then an omnibus test (ANOVA when every
//! condition looks normal, Kruskal–Wallis otherwise); only if the omnibus is
//! significant, all pairwise tests (Student t when both members look normal,
//! Mann–Whitney otherwise), Holm-corrected over the comparison family.

use serde::{Deserialize, Serialize};

use crate::correction::{holm_bonferroni, star_level, stars};
use crate::error::{check_finite, Result, StatsError};
use crate::normality::shapiro_wilk;
use crate::parametric::{anova_oneway, t_test_independent, t_test_welch};
use crate::rank::{kruskal_wallis, mann_whitney_u};

pub const DEFAULT_ALPHA: f64 = 0.05;
const MIN_SEEDS: usize = 3;

/// Scores (one per seed) for each condition of one experiment subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    conditions: Vec<String>,
    scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(conditions: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if conditions.len() != scores.len() {
            return Err(StatsError::Domain(format!(
                "{} condition labels for {} score lists",
                conditions.len(),
                scores.len()
            )));
        }
        if conditions.len() < 2 {
            return Err(StatsError::Domain("need at least 2 conditions".into()));
        }
        let seeds = scores[0].len();
        if seeds < MIN_SEEDS {
            return Err(StatsError::TooFewObservations { needed: MIN_SEEDS, got: seeds });
        }
        for (label, s) in conditions.iter().zip(&scores) {
            if s.len() != seeds {
                return Err(StatsError::Domain(format!(
                    "condition {label} has {} scores, expected {seeds}",
                    s.len()
                )));
            }
            check_finite(s)?;
        }
        Ok(Self { conditions, scores })
    }

    pub fn conditions(&self) -> &[String] {
        &self.conditions
    }

    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn seeds(&self) -> usize {
        self.scores[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TVariant {
    #[default]
    Pooled,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub alpha: f64,
    pub t_variant: TVariant,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, t_variant: TVariant::Pooled }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmnibusTest {
    Anova,
    KruskalWallis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairwiseTest {
    StudentT,
    WelchT,
    MannWhitneyU,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub label: String,
    pub mean: f64,
    /// `None` when Shapiro–Wilk is undefined (e.g. constant scores).
    pub shapiro_w: Option<f64>,
    pub shapiro_p: Option<f64>,
    pub normal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Omnibus {
    pub test: OmnibusTest,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Condition indices, `first < second`.
    pub first: usize,
    pub second: usize,
    pub test: PairwiseTest,
    pub statistic: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub stars: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub alpha: f64,
    pub conditions: Vec<ConditionSummary>,
    pub omnibus: Omnibus,
    /// Empty when the omnibus test did not reach significance.
    pub pairwise: Vec<Comparison>,
}

impl SignificanceReport {
    pub fn comparison(&self, first: usize, second: usize) -> Option<&Comparison> {
        let (lo, hi) = if first < second { (first, second) } else { (second, first) };
        self.pairwise.iter().find(|c| c.first == lo && c.second == hi)
    }

    /// Improvement annotation for `condition` against every earlier condition.
    ///
    /// The reference at index 0 is marked with `*`, index 1 with `†`, index 2
    /// with `‡`, later ones with `§`; each symbol is repeated once per star
    /// level of the adjusted p. Only improvements (higher mean) are marked.
    pub fn marks(&self, condition: usize) -> String {
        let mut out = String::new();
        for reference in 0..condition {
            let Some(c) = self.comparison(reference, condition) else {
                continue;
            };
            if c.p_adjusted >= self.alpha
                || self.conditions[condition].mean <= self.conditions[reference].mean
            {
                continue;
            }
            let symbol = match reference {
                0 => '*',
                1 => '†',
                2 => '‡',
                _ => '§',
            };
            out.extend(std::iter::repeat_n(symbol, star_level(c.p_adjusted)));
        }
        out
    }
}

/// Significance report for one table, Holm-corrected within the table.
pub fn significance_pipeline(table: &ScoreTable, opts: PipelineOptions) -> Result<SignificanceReport> {
    let mut reports = subtask_significance(std::slice::from_ref(table), opts)?;
    Ok(reports.remove(0))
}

/// Reports for every table of one subtask, with a single Holm family
/// spanning all pairwise comparisons across the tables.
pub fn subtask_significance(
    tables: &[ScoreTable],
    opts: PipelineOptions,
) -> Result<Vec<SignificanceReport>> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(StatsError::Domain(format!("alpha {} outside (0, 1)", opts.alpha)));
    }
    let mut reports = tables
        .iter()
        .map(|t| unadjusted(t, opts))
        .collect::<Result<Vec<_>>>()?;

    let raw: Vec<f64> = reports
        .iter()
        .flat_map(|r| r.pairwise.iter().map(|c| c.p_raw))
        .collect();
    let adjusted = holm_bonferroni(&raw)?;
    let mut it = adjusted.into_iter();
    for report in &mut reports {
        for c in &mut report.pairwise {
            c.p_adjusted = it.next().expect("one adjusted p per comparison");
            c.stars = if c.p_adjusted < opts.alpha { stars(c.p_adjusted).to_string() } else { String::new() };
        }
    }
    Ok(reports)
}

fn unadjusted(table: &ScoreTable, opts: PipelineOptions) -> Result<SignificanceReport> {
    let conditions: Vec<ConditionSummary> = table
        .conditions
        .iter()
        .zip(&table.scores)
        .map(|(label, s)| {
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            Ok(match shapiro_wilk(s) {
                Ok(sw) => ConditionSummary {
                    label: label.clone(),
                    mean,
                    shapiro_w: Some(sw.w),
                    shapiro_p: Some(sw.p_value),
                    normal: sw.p_value >= opts.alpha,
                },
                Err(StatsError::Degenerate(_)) => ConditionSummary {
                    label: label.clone(),
                    mean,
                    shapiro_w: None,
                    shapiro_p: None,
                    normal: false,
                },
                Err(e) => return Err(e),
            })
        })
        .collect::<Result<_>>()?;

    let groups: Vec<&[f64]> = table.scores.iter().map(Vec::as_slice).collect();
    let all_normal = conditions.iter().all(|c| c.normal);
    let omnibus = if all_normal {
        let r = anova_oneway(&groups)?;
        Omnibus { test: OmnibusTest::Anova, statistic: r.f, p_value: r.p_value, significant: false }
    } else {
        let r = kruskal_wallis(&groups)?;
        Omnibus { test: OmnibusTest::KruskalWallis, statistic: r.h, p_value: r.p_value, significant: false }
    };
    let omnibus = Omnibus { significant: omnibus.p_value < opts.alpha, ..omnibus };

    let mut pairwise = Vec::new();
    if omnibus.significant {
        for i in 0..groups.len() {
            for j in i + 1..groups.len() {
                let (a, b) = (groups[i], groups[j]);
                let parametric = conditions[i].normal && conditions[j].normal;
                let (test, statistic, p_raw) = if parametric {
                    let (test, r) = match opts.t_variant {
                        TVariant::Pooled => (PairwiseTest::StudentT, t_test_independent(a, b)?),
                        TVariant::Welch => (PairwiseTest::WelchT, t_test_welch(a, b)?),
                    };
                    (test, r.t, r.p_value)
                } else {
                    let r = mann_whitney_u(a, b)?;
                    (PairwiseTest::MannWhitneyU, r.u, r.p_value)
                };
                pairwise.push(Comparison {
                    first: i,
                    second: j,
                    test,
                    statistic,
                    p_raw,
                    p_adjusted: p_raw,
                    stars: String::new(),
                });
            }
        }
    }

    Ok(SignificanceReport { alpha: opts.alpha, conditions, omnibus, pairwise })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        ["baseline", "5", "10", "15"].iter().map(|s| s.to_string()).collect()
    }

    const NOISE: [f64; 5] = [-0.1, 0.05, 0.0, -0.05, 0.1];

    fn shifted(base: f64, noise_scale: f64) -> Vec<f64> {
        NOISE.iter().map(|e| base + e * noise_scale).collect()
    }

    #[test]
    fn table_validation() {
        assert!(ScoreTable::new(labels(), vec![vec![1.0, 2.0]; 4]).is_err());
        assert!(ScoreTable::new(labels(), vec![vec![1.0, 2.0, 3.0]; 3]).is_err());
        let ragged = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        assert!(ScoreTable::new(labels(), ragged).is_err());
        assert!(ScoreTable::new(vec!["a".into()], vec![vec![1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn identical_conditions_stop_at_gate() {
        let s = vec![0.50, 0.61, 0.55, 0.58, 0.53];
        let t = ScoreTable::new(labels(), vec![s.clone(), s.clone(), s.clone(), s]).unwrap();
        let r = significance_pipeline(&t, PipelineOptions::default()).unwrap();
        assert_eq!(r.omnibus.test, OmnibusTest::Anova);
        assert!((r.omnibus.p_value - 1.0).abs() < 1e-12);
        assert!(!r.omnibus.significant);
        assert!(r.pairwise.is_empty());
        assert_eq!(r.marks(3), "");
    }

    #[test]
    fn shifted_condition_is_starred() {
        let t = ScoreTable::new(
            labels(),
            vec![shifted(50.0, 1.0), shifted(50.0, 1.0), shifted(50.0, 1.0), shifted(60.0, 1.0)],
        )
        .unwrap();
        let r = significance_pipeline(&t, PipelineOptions::default()).unwrap();
        assert!(r.omnibus.p_value < 0.001);
        assert_eq!(r.pairwise.len(), 6);
        for c in &r.pairwise {
            if c.second == 3 {
                assert!(!c.stars.is_empty(), "{c:?}");
            } else {
                assert!(c.stars.is_empty(), "{c:?}");
            }
        }
        assert_eq!(r.marks(3), "***†††‡‡‡");
        assert_eq!(r.marks(1), "");
    }

    #[test]
    fn skewed_condition_routes_to_rank_tests() {
        let skewed = vec![1.0, 1.1, 1.2, 1.3, 10.0];
        assert!(shapiro_wilk(&skewed).unwrap().p_value < 0.05);
        let t = ScoreTable::new(
            labels(),
            vec![shifted(20.0, 1.0), skewed, shifted(21.0, 1.0), shifted(40.0, 1.0)],
        )
        .unwrap();
        let r = significance_pipeline(&t, PipelineOptions::default()).unwrap();
        assert!(!r.conditions[1].normal);
        assert_eq!(r.omnibus.test, OmnibusTest::KruskalWallis);
        assert!(r.omnibus.significant);
        for c in &r.pairwise {
            let expect = if c.first == 1 || c.second == 1 {
                PairwiseTest::MannWhitneyU
            } else {
                PairwiseTest::StudentT
            };
            assert_eq!(c.test, expect, "{c:?}");
        }
    }

    #[test]
    fn constant_condition_counts_as_non_normal() {
        let t = ScoreTable::new(
            labels(),
            vec![vec![1.0; 5], shifted(5.0, 1.0), shifted(9.0, 1.0), shifted(13.0, 1.0)],
        )
        .unwrap();
        let r = significance_pipeline(&t, PipelineOptions::default()).unwrap();
        assert_eq!(r.conditions[0].shapiro_w, None);
        assert_eq!(r.omnibus.test, OmnibusTest::KruskalWallis);
    }

    #[test]
    fn family_spans_tables() {
        let t = ScoreTable::new(
            labels(),
            vec![shifted(50.0, 1.0), shifted(50.0, 1.0), shifted(50.0, 1.0), shifted(60.0, 1.0)],
        )
        .unwrap();
        let single = significance_pipeline(&t, PipelineOptions::default()).unwrap();
        let both = subtask_significance(&[t.clone(), t], PipelineOptions::default()).unwrap();
        assert_eq!(both.len(), 2);
        for (c1, c2) in single.pairwise.iter().zip(&both[0].pairwise) {
            assert_eq!(c1.p_raw, c2.p_raw);
            assert!(c2.p_adjusted >= c1.p_adjusted);
        }
    }

    #[test]
    fn welch_variant() {
        let t = ScoreTable::new(
            labels(),
            vec![shifted(50.0, 1.0), shifted(50.0, 3.0), shifted(52.0, 1.0), shifted(60.0, 2.0)],
        )
        .unwrap();
        let r = significance_pipeline(&t, PipelineOptions { t_variant: TVariant::Welch, ..Default::default() })
            .unwrap();
        assert!(r.pairwise.iter().all(|c| c.test == PairwiseTest::WelchT));
    }
}
