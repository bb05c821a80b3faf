//! Holm–Bonferroni step-down adjustment and significance stars.

use crate::error::{Result, StatsError};

/// Holm-adjusted p-values, returned in input order.
pub fn holm_bonferroni(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::Domain(format!("p-value {bad} outside [0, 1]")));
    }
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    // stable: equal p-values keep input order
    order.sort_by(|&i, &j| pvals[i].total_cmp(&pvals[j]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0_f64;
    for (rank, &idx) in order.iter().enumerate() {
        let scaled = ((m - rank) as f64 * pvals[idx]).min(1.0);
        running = running.max(scaled);
        adjusted[idx] = running;
    }
    Ok(adjusted)
}

/// Number of stars for a p-value: 3 below 0.001, 2 below 0.01, 1 below 0.05.
pub fn star_level(p: f64) -> usize {
    if p < 0.001 {
        3
    } else if p < 0.01 {
        2
    } else if p < 0.05 {
        1
    } else {
        0
    }
}

pub fn stars(p: f64) -> &'static str {
    ["", "*", "**", "***"][star_level(p)]
}
