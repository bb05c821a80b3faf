//! Machine-readable and tabular renderings of evaluation and significance results.
//!
//! JSON keeps full-precision numbers next to their two-decimal percent
//! strings; text tables show percentages only.

use std::fs;
use std::path::{Path, PathBuf};

use dimabsa_stats::{OmnibusTest, PairwiseTest, SignificanceReport};
use serde_json::{json, Value};

use crate::decimal::format_percent;
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::model::TaskKind;

pub const NOT_AVAILABLE: &str = "n/a";

pub trait Report {
    fn to_json(&self) -> Value;
    fn render_table(&self) -> String;
}

/// Sibling text path for a report: `report.json` → `report.txt`.
pub fn table_path(path: &Path) -> PathBuf {
    path.with_extension("txt")
}

/// Write the JSON record at `path` and the text table next to it.
pub fn save_report(path: impl AsRef<Path>, report: &dyn Report) -> Result<()> {
    let path = path.as_ref();
    let mut body = serde_json::to_string_pretty(&report.to_json()).expect("JSON values serialize");
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))?;
    let txt = table_path(path);
    fs::write(&txt, report.render_table()).map_err(|e| Error::io(&txt, e))
}

fn pad(s: &str, width: usize) -> String {
    let n = s.chars().count();
    format!("{s}{}", " ".repeat(width.saturating_sub(n)))
}

/// Left-aligned columns separated by two spaces, trailing blanks trimmed.
fn render_grid(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().enumerate().map(|(c, s)| pad(s, widths[c])).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn pct_or_na(value: f64, denominator: usize) -> String {
    if denominator == 0 {
        NOT_AVAILABLE.to_string()
    } else {
        format_percent(value)
    }
}

impl Report for EvalReport {
    fn to_json(&self) -> Value {
        let instances: Vec<Value> = self
            .instances
            .iter()
            .map(|i| {
                json!({
                    "id": i.id,
                    "n_pred": i.n_pred,
                    "n_gold": i.n_gold,
                    "pairs": i.assignment.pairs.iter().map(|p| json!({"pred": p.pred, "gold": p.gold, "ctp": p.ctp})).collect::<Vec<_>>(),
                    "unmatched_pred": i.assignment.unmatched_pred,
                    "unmatched_gold": i.assignment.unmatched_gold,
                })
            })
            .collect();
        json!({
            "task": self.task,
            "c_prec": self.c_prec,
            "c_rec": self.c_rec,
            "c_f1": self.c_f1,
            "c_prec_pct": format_percent(self.c_prec),
            "c_rec_pct": format_percent(self.c_rec),
            "c_f1_pct": format_percent(self.c_f1),
            "n_pred": self.n_pred,
            "n_gold": self.n_gold,
            "sum_ctp": self.sum_ctp,
            "instances": instances,
        })
    }

    fn render_table(&self) -> String {
        let f1 = if self.n_pred == 0 && self.n_gold == 0 { NOT_AVAILABLE.to_string() } else { format_percent(self.c_f1) };
        let rows = vec![
            vec![self.task.to_string(), "cPrec".into(), "cRec".into(), "cF1".into()],
            vec!["%".into(), pct_or_na(self.c_prec, self.n_pred), pct_or_na(self.c_rec, self.n_gold), f1],
        ];
        let mut out = render_grid(&rows);
        out.push_str(&format!(
            "\ninstances {}  predictions {}  gold {}  sum cTP {:.6}\n",
            self.instances.len(),
            self.n_pred,
            self.n_gold,
            self.sum_ctp
        ));
        out
    }
}

fn omnibus_name(t: OmnibusTest) -> &'static str {
    match t {
        OmnibusTest::Anova => "one-way ANOVA F",
        OmnibusTest::KruskalWallis => "Kruskal-Wallis H",
    }
}

fn pairwise_name(t: PairwiseTest) -> &'static str {
    match t {
        PairwiseTest::StudentT => "Student t",
        PairwiseTest::WelchT => "Welch t",
        PairwiseTest::MannWhitneyU => "Mann-Whitney U",
    }
}

fn format_p(p: f64) -> String {
    if p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        format!("{p:.4}")
    }
}

impl Report for SignificanceReport {
    fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    fn render_table(&self) -> String {
        let mut out = format!("Normality (Shapiro-Wilk, alpha = {})\n", self.alpha);
        let mut rows = vec![vec!["condition".to_string(), "mean %".into(), "W".into(), "p".into(), "normal".into()]];
        for c in &self.conditions {
            rows.push(vec![
                c.label.clone(),
                format_percent(c.mean),
                c.shapiro_w.map_or(NOT_AVAILABLE.into(), |w| format!("{w:.4}")),
                c.shapiro_p.map_or(NOT_AVAILABLE.into(), format_p),
                if c.normal { "yes".into() } else { "no".into() },
            ]);
        }
        out.push_str(&render_grid(&rows));
        out.push_str(&format!(
            "\nOmnibus: {} = {:.4}, p = {} ({})\n",
            omnibus_name(self.omnibus.test),
            self.omnibus.statistic,
            format_p(self.omnibus.p_value),
            if self.omnibus.significant { "significant" } else { "not significant" }
        ));
        out.push_str("\nPairwise (Holm-adjusted)\n");
        if self.pairwise.is_empty() {
            out.push_str(NOT_AVAILABLE);
            out.push('\n');
        } else {
            let mut rows = vec![vec![
                "comparison".to_string(),
                "test".into(),
                "statistic".into(),
                "p raw".into(),
                "p adj".into(),
                "sig".into(),
            ]];
            for c in &self.pairwise {
                rows.push(vec![
                    format!("{} vs {}", self.conditions[c.first].label, self.conditions[c.second].label),
                    pairwise_name(c.test).into(),
                    format!("{:.4}", c.statistic),
                    format_p(c.p_raw),
                    format_p(c.p_adjusted),
                    c.stars.clone(),
                ]);
            }
            out.push_str(&render_grid(&rows));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTriple {
    pub c_prec: f64,
    pub c_rec: f64,
    pub c_f1: f64,
}

impl From<&EvalReport> for MetricTriple {
    fn from(r: &EvalReport) -> Self {
        Self { c_prec: r.c_prec, c_rec: r.c_rec, c_f1: r.c_f1 }
    }
}

impl MetricTriple {
    /// Component-wise mean, e.g. over seeds.
    pub fn mean(items: &[MetricTriple]) -> Option<Self> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        Some(Self {
            c_prec: items.iter().map(|m| m.c_prec).sum::<f64>() / n,
            c_rec: items.iter().map(|m| m.c_rec).sum::<f64>() / n,
            c_f1: items.iter().map(|m| m.c_f1).sum::<f64>() / n,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub language: String,
    pub domain: String,
    /// One entry per condition; `None` renders as n/a.
    pub cells: Vec<Option<MetricTriple>>,
    /// Significance marks appended to each condition's cF1.
    pub marks: Vec<String>,
}

/// Per language-domain rows with cPrec/cRec/cF1 column groups per condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub task: TaskKind,
    pub conditions: Vec<String>,
    pub rows: Vec<ResultsRow>,
}

impl ResultsTable {
    pub fn new(task: TaskKind, conditions: Vec<String>) -> Self {
        Self { task, conditions, rows: Vec::new() }
    }

    pub fn push_row(&mut self, language: impl Into<String>, domain: impl Into<String>, cells: Vec<Option<MetricTriple>>) -> Result<()> {
        if cells.len() != self.conditions.len() {
            return Err(Error::Contract(format!(
                "row has {} cells for {} conditions",
                cells.len(),
                self.conditions.len()
            )));
        }
        let marks = vec![String::new(); cells.len()];
        self.rows.push(ResultsRow { language: language.into(), domain: domain.into(), cells, marks });
        Ok(())
    }

    /// Take cF1 marks for row `row` from a report over the same conditions.
    pub fn apply_significance(&mut self, row: usize, report: &SignificanceReport) -> Result<()> {
        if report.conditions.len() != self.conditions.len() {
            return Err(Error::Contract("significance report and table disagree on conditions".into()));
        }
        let r = self.rows.get_mut(row).ok_or_else(|| Error::Contract(format!("no results row {row}")))?;
        r.marks = (0..r.cells.len()).map(|c| report.marks(c)).collect();
        Ok(())
    }
}

impl Report for ResultsTable {
    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let cells: Vec<Value> = r
                    .cells
                    .iter()
                    .zip(&r.marks)
                    .zip(&self.conditions)
                    .map(|((cell, marks), cond)| match cell {
                        None => json!({"condition": cond, "value": null}),
                        Some(m) => json!({
                            "condition": cond,
                            "c_prec": m.c_prec,
                            "c_rec": m.c_rec,
                            "c_f1": m.c_f1,
                            "c_prec_pct": format_percent(m.c_prec),
                            "c_rec_pct": format_percent(m.c_rec),
                            "c_f1_pct": format_percent(m.c_f1),
                            "marks": marks,
                        }),
                    })
                    .collect();
                json!({"language": r.language, "domain": r.domain, "cells": cells})
            })
            .collect();
        json!({"task": self.task, "conditions": self.conditions, "rows": rows})
    }

    fn render_table(&self) -> String {
        let mut head = vec![self.task.to_string(), String::new()];
        let mut sub = vec!["Language".to_string(), "Domain".into()];
        for c in &self.conditions {
            head.extend([c.clone(), String::new(), String::new()]);
            sub.extend(["cPrec".into(), "cRec".into(), "cF1".into()]);
        }
        let mut rows = vec![head, sub];
        if self.rows.is_empty() {
            let mut r = vec![NOT_AVAILABLE.to_string(), String::new()];
            r.extend(std::iter::repeat_n(NOT_AVAILABLE.to_string(), 3 * self.conditions.len()));
            rows.push(r);
        }
        for r in &self.rows {
            let mut line = vec![r.language.clone(), r.domain.clone()];
            for (cell, marks) in r.cells.iter().zip(&r.marks) {
                match cell {
                    Some(m) => line.extend([
                        format_percent(m.c_prec),
                        format_percent(m.c_rec),
                        format!("{}{marks}", format_percent(m.c_f1)),
                    ]),
                    None => line.extend(std::iter::repeat_n(NOT_AVAILABLE.to_string(), 3)),
                }
            }
            rows.push(line);
        }
        render_grid(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dimabsa_stats::{significance_pipeline, PipelineOptions, ScoreTable};

    fn eval(c_f1: f64) -> EvalReport {
        EvalReport {
            task: TaskKind::DimAste,
            c_prec: c_f1,
            c_rec: c_f1,
            c_f1,
            n_pred: 10,
            n_gold: 10,
            sum_ctp: c_f1 * 10.0,
            instances: Vec::new(),
        }
    }

    #[test]
    fn percent_rendering() {
        let table = eval(0.6990).render_table();
        assert!(table.contains("69.90"), "{table}");
        assert_eq!(eval(0.6990).to_json()["c_f1_pct"], "69.90");
    }

    #[test]
    fn empty_sections_render_na() {
        let mut r = eval(0.0);
        r.n_pred = 0;
        r.n_gold = 0;
        assert!(r.render_table().contains(NOT_AVAILABLE));
        let t = ResultsTable::new(TaskKind::DimAste, vec!["Baseline".into()]);
        assert!(t.render_table().contains(NOT_AVAILABLE));

        let table = ScoreTable::new(vec!["a".into(), "b".into()], vec![vec![0.5; 5], vec![0.5; 5]]).unwrap();
        let rep = significance_pipeline(&table, PipelineOptions::default()).unwrap();
        assert!(rep.render_table().contains("Pairwise (Holm-adjusted)\nn/a"));
    }

    #[test]
    fn saves_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        save_report(&a, &eval(0.5)).unwrap();
        save_report(&b, &eval(0.5)).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(fs::read(table_path(&a)).unwrap(), fs::read(table_path(&b)).unwrap());
    }

    #[test]
    fn results_table_carries_marks() {
        let conditions: Vec<String> = ["Baseline", "SC-5", "SC-10", "SC-15"].map(String::from).to_vec();
        let base = [0.60, 0.61, 0.59, 0.60, 0.605];
        let scores: Vec<Vec<f64>> = (0..4).map(|c| base.iter().map(|x| x + 0.1 * c as f64).collect()).collect();
        let st = ScoreTable::new(conditions.clone(), scores.clone()).unwrap();
        let rep = significance_pipeline(&st, PipelineOptions::default()).unwrap();
        let mut t = ResultsTable::new(TaskKind::DimAste, conditions);
        let cells = scores
            .iter()
            .map(|s| {
                let m = s.iter().sum::<f64>() / s.len() as f64;
                Some(MetricTriple { c_prec: m, c_rec: m, c_f1: m })
            })
            .collect();
        t.push_row("English", "Restaurant", cells).unwrap();
        t.apply_significance(0, &rep).unwrap();
        let text = t.render_table();
        assert!(text.contains("English"), "{text}");
        assert!(t.rows[0].marks[0].is_empty());
        assert!(t.rows[0].marks[3].starts_with('*') && t.rows[0].marks[3].contains('‡'), "{text}");
    }
}
