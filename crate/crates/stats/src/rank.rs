//! Rank-based tests: Kruskal–Wallis H and Mann–Whitney U.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Result, StatsError};
use crate::special::{chi2_sf, normal_sf};

/// Largest pooled sample size for which the exact Mann–Whitney null is enumerated.
pub const MWU_EXACT_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub df: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwuMethod {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub method: MwuMethod,
}

/// Average (mid) ranks of `values`, 1-based, plus the tie term `Σ (t³ - t)`.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Kruskal–Wallis H with tie correction; p from chi-square with `g - 1` df.
///
/// When every pooled value is identical the statistic is 0/0; this returns
/// `H = 0, p = 1`.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<KruskalWallis> {
    if groups.len() < 2 {
        return Err(StatsError::Domain(format!(
            "Kruskal-Wallis needs at least 2 groups, got {}",
            groups.len()
        )));
    }
    for g in groups {
        if g.is_empty() {
            return Err(StatsError::TooFewObservations { needed: 1, got: 0 });
        }
        check_finite(g)?;
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n = pooled.len();
    if n < 3 {
        return Err(StatsError::TooFewObservations { needed: 3, got: n });
    }
    let df = (groups.len() - 1) as f64;
    let (ranks, ties) = midranks(&pooled);
    let nf = n as f64;
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(KruskalWallis { h: 0.0, df, p_value: 1.0 });
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = ((12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0)) / correction).max(0.0);
    Ok(KruskalWallis { h, df, p_value: chi2_sf(h, df) })
}

/// Two-sided Mann–Whitney U test.
///
/// Tie-free inputs with `n_a + n_b <= 16` use the exact null distribution;
/// everything else uses the normal approximation with tie and continuity
/// corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    for s in [a, b] {
        if s.is_empty() {
            return Err(StatsError::TooFewObservations { needed: 1, got: 0 });
        }
        check_finite(s)?;
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let ra: f64 = ranks[..na].iter().sum();
    let u = ra - (na * (na + 1)) as f64 / 2.0;

    if na + nb <= MWU_EXACT_MAX_N && ties == 0.0 {
        let p = exact_two_sided(u.round() as usize, na, nb);
        return Ok(MannWhitney { u, p_value: p, method: MwuMethod::Exact });
    }

    let n = (na + nb) as f64;
    let mu = (na * nb) as f64 / 2.0;
    let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(MannWhitney { u, p_value: p, method: MwuMethod::Asymptotic })
}

/// Counts of each U value under the null for sample sizes `(m, n)`.
fn u_distribution(m: usize, n: usize) -> Vec<u64> {
    // counts[i][j][u]: arrangements of i + j items with U = u, built up row by row.
    let max_u = m * n;
    let mut prev: Vec<Vec<u64>> = (0..=n).map(|_| vec![0; max_u + 1]).collect();
    for row in prev.iter_mut() {
        row[0] = 1;
    }
    for i in 1..=m {
        let mut cur: Vec<Vec<u64>> = (0..=n).map(|_| vec![0; max_u + 1]).collect();
        cur[0][0] = 1;
        for j in 1..=n {
            for u in 0..=i * j {
                // last item from the first sample contributes j to U
                let from_first = if u >= j { prev[j][u - j] } else { 0 };
                cur[j][u] = from_first + cur[j - 1][u];
            }
        }
        prev = cur;
    }
    prev.swap_remove(n)
}

fn exact_two_sided(u: usize, m: usize, n: usize) -> f64 {
    let counts = u_distribution(m, n);
    let total: u64 = counts.iter().sum();
    let lower: u64 = counts[..=u].iter().sum();
    let upper: u64 = counts[u..].iter().sum();
    (2.0 * lower.min(upper) as f64 / total as f64).min(1.0)
}
