//! Shapiro–Wilk W test via Royston's approximation (AS R94).

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Result, StatsError};
use crate::special::{normal_ppf, normal_sf};

const MIN_N: usize = 3;
const MAX_N: usize = 5000;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Shapiro–Wilk normality test for `3 <= n <= 5000` observations.
///
/// Small samples (`n <= 11`) use Royston's gamma-log transform of `1 - W`,
/// larger ones the log-normal transform; `n = 3` uses the exact
/// distribution.
pub fn shapiro_wilk(sample: &[f64]) -> Result<ShapiroWilk> {
    let n = sample.len();
    if n < MIN_N {
        return Err(StatsError::TooFewObservations { needed: MIN_N, got: n });
    }
    if n > MAX_N {
        return Err(StatsError::TooManyObservations { max: MAX_N, got: n });
    }
    check_finite(sample)?;

    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= f64::EPSILON * x[n - 1].abs().max(1.0) {
        return Err(StatsError::Degenerate("all observations are identical"));
    }

    let a = coefficients(n);
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let num: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (x[n - 1 - i] - x[i]))
        .sum();
    let w = (num * num / ss).min(1.0);

    if n == 3 {
        let w = w.max(0.75);
        let p = 1.0 - (6.0 / std::f64::consts::PI) * w.sqrt().acos();
        return Ok(ShapiroWilk { w, p_value: p.clamp(0.0, 1.0) });
    }

    Ok(ShapiroWilk { w, p_value: p_value(w, n) })
}

/// Antisymmetric weights `a_1 .. a_{n/2}` for the largest-minus-smallest differences.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let nf = n as f64;
    let m: Vec<f64> = (0..half)
        .map(|i| normal_ppf((i as f64 + 1.0 - 0.375) / (nf + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / nf.sqrt();

    let mut a = vec![0.0; half];
    a[0] = poly(&C1, rsn) - m[0] / ssumm2;
    let (first_free, fac) = if n > 5 {
        a[1] = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]))
            .sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a[0] * a[0])).sqrt();
        (1, fac)
    };
    for i in first_free..half {
        a[i] = -m[i] / fac;
    }
    a
}

fn p_value(w: f64, n: usize) -> f64 {
    let nf = n as f64;
    let w1 = (1.0 - w).ln();
    if !w1.is_finite() {
        // W == 1
        return 1.0;
    }
    let z = if n <= 11 {
        let gamma = poly(&G, nf);
        if w1 >= gamma {
            return 0.0;
        }
        let y = -(gamma - w1).ln();
        let m = poly(&C3, nf);
        let s = poly(&C4, nf).exp();
        (y - m) / s
    } else {
        let ln_n = nf.ln();
        let m = poly(&C5, ln_n);
        let s = poly(&C6, ln_n).exp();
        (w1 - m) / s
    };
    normal_sf(z).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.stats.shapiro (same AS R94 algorithm).
    #[test]
    fn royston_worked_example() {
        let x = [148.0, 154.0, 158.0, 160.0, 161.0, 162.0, 166.0, 170.0, 182.0, 195.0, 236.0];
        let r = shapiro_wilk(&x).unwrap();
        assert!((r.w - 0.79).abs() < 1e-2);
        assert!((r.w - 0.788_814_694_863_171_6).abs() < 1e-6, "{}", r.w);
        assert!((r.p_value - 0.006_703_814_061_898_823).abs() < 1e-4, "{}", r.p_value);
    }

    #[test]
    fn linear_sample_is_normal_enough() {
        let r = shapiro_wilk(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((r.w - 0.986_762_155_211_559).abs() < 1e-6);
        assert!(r.p_value > 0.5);
        assert!((r.p_value - 0.967_173_934_972_858_2).abs() < 1e-4);
    }

    #[test]
    fn n3_exact() {
        let r = shapiro_wilk(&[1.0, 2.0, 4.0]).unwrap();
        assert!((r.w - 0.964_285_714_285_714_2).abs() < 1e-10);
        assert!((r.p_value - 0.636_886_845_028_968_9).abs() < 1e-6);
    }

    #[test]
    fn large_branch() {
        let x: Vec<f64> = (1..=20).map(f64::from).collect();
        let r = shapiro_wilk(&x).unwrap();
        assert!((r.w - 0.960_375_183_242_988_4).abs() < 1e-6);
        assert!((r.p_value - 0.551_371_745_791_677_1).abs() < 1e-4);
    }

    #[test]
    fn skewed_sample_rejects() {
        let r = shapiro_wilk(&[1.0, 1.1, 1.2, 1.3, 10.0]).unwrap();
        assert!((r.w - 0.579_849_551_729_790_6).abs() < 1e-6);
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn errors() {
        assert_eq!(
            shapiro_wilk(&[1.0, 2.0]),
            Err(StatsError::TooFewObservations { needed: 3, got: 2 })
        );
        assert!(matches!(shapiro_wilk(&[5.0; 5]), Err(StatsError::Degenerate(_))));
        assert_eq!(shapiro_wilk(&[1.0, f64::NAN, 2.0]), Err(StatsError::NonFinite));
        let big = vec![1.0; 5001];
        assert!(matches!(shapiro_wilk(&big), Err(StatsError::TooManyObservations { .. })));
    }
}
