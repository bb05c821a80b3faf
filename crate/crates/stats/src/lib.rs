//! Significance testing for comparing experimental conditions that were each
//! run with several random seeds.

pub mod correction;
mod error;
pub mod normality;
pub mod parametric;
pub mod pipeline;
pub mod rank;
pub mod special;

pub use correction::{holm_bonferroni, star_level, stars};
pub use error::{Result, StatsError};
pub use normality::{shapiro_wilk, ShapiroWilk};
pub use parametric::{anova_oneway, t_test_independent, t_test_welch, Anova, TTest};
pub use pipeline::{
    significance_pipeline, subtask_significance, Comparison, ConditionSummary, Omnibus, OmnibusTest,
    PairwiseTest, PipelineOptions, ScoreTable, SignificanceReport, TVariant, DEFAULT_ALPHA,
};
pub use rank::{kruskal_wallis, mann_whitney_u, KruskalWallis, MannWhitney, MwuMethod};
