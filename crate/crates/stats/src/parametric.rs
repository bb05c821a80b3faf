//! One-way ANOVA and independent two-sample t-tests.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Result, StatsError};
use crate::special::{f_sf, student_t_two_sided};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anova {
    pub f: f64,
    pub df_between: f64,
    pub df_within: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

/// One-way ANOVA over `groups`; p from F(g - 1, N - g).
pub fn anova_oneway(groups: &[&[f64]]) -> Result<Anova> {
    if groups.len() < 2 {
        return Err(StatsError::Domain(format!(
            "ANOVA needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    for g in groups {
        if g.len() < 2 {
            return Err(StatsError::TooFewObservations { needed: 2, got: g.len() });
        }
        check_finite(g)?;
    }
    let total_n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / total_n as f64;

    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += sum_sq_dev(g, m);
    }
    if ss_within <= 0.0 {
        return Err(StatsError::Degenerate("zero within-group variance"));
    }
    let df_between = (groups.len() - 1) as f64;
    let df_within = (total_n - groups.len()) as f64;
    let f = (ss_between / df_between) / (ss_within / df_within);
    Ok(Anova {
        f,
        df_between,
        df_within,
        p_value: f_sf(f, df_between, df_within),
    })
}

fn check_two(a: &[f64], b: &[f64]) -> Result<()> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFewObservations { needed: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    Ok(())
}

/// Student's two-sided independent t-test with pooled variance.
pub fn t_test_independent(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_two(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let df = na + nb - 2.0;
    let pooled = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / df;
    if pooled <= 0.0 {
        return Err(StatsError::Degenerate("zero pooled variance"));
    }
    let t = (ma - mb) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TTest { t, df, p_value: student_t_two_sided(t, df) })
}

/// Welch's unequal-variance t-test, two-sided, Welch–Satterthwaite df.
pub fn t_test_welch(a: &[f64], b: &[f64]) -> Result<TTest> {
    check_two(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let va = sum_sq_dev(a, ma) / (na - 1.0) / na;
    let vb = sum_sq_dev(b, mb) / (nb - 1.0) / nb;
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Err(StatsError::Degenerate("zero variance in both samples"));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(TTest { t, df, p_value: student_t_two_sided(t, df) })
}
