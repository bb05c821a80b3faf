//! Two-decimal rendering with round-half-even.
//!
//! Values are kept at full precision internally; this is the only place
//! they are rounded. A value whose scaled fraction lies within a few ulps of
//! one half is treated as a decimal midpoint, so `5.545` (stored as the
//! nearest binary double) renders as `5.54`.

const MIDPOINT_TOL: f64 = 1e-9;

/// `x` rounded half-to-even to an integer number of hundredths.
pub fn to_cents(x: f64) -> i64 {
    let scaled = x * 100.0;
    let floor = scaled.floor();
    let frac = scaled - floor;
    if (frac - 0.5).abs() <= MIDPOINT_TOL * scaled.abs().max(1.0) {
        let f = floor as i64;
        if f % 2 == 0 {
            f
        } else {
            f + 1
        }
    } else {
        scaled.round() as i64
    }
}

pub fn round_2dp(x: f64) -> f64 {
    to_cents(x) as f64 / 100.0
}

/// Fixed two-decimal string, half-even.
pub fn format_2dp(x: f64) -> String {
    let cents = to_cents(x);
    let sign = if cents < 0 { "-" } else { "" };
    let abs = cents.unsigned_abs();
    format!("{sign}{}.{:02}", abs / 100, abs % 100)
}

/// A fraction in `[0, 1]` rendered as a two-decimal percentage.
pub fn format_percent(fraction: f64) -> String {
    format_2dp(fraction * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_go_to_even() {
        assert_eq!(format_2dp(5.545), "5.54");
        assert_eq!(format_2dp(6.045), "6.04");
        assert_eq!(format_2dp(0.125), "0.12");
        assert_eq!(format_2dp(0.135), "0.14");
        assert_eq!(format_2dp(-0.125), "-0.12");
    }

    #[test]
    fn ordinary_rounding() {
        assert_eq!(format_2dp(6.906_666_666), "6.91");
        assert_eq!(format_2dp(7.0), "7.00");
        assert_eq!(format_2dp(9.0), "9.00");
        assert_eq!(format_2dp(1e-12), "0.00");
        assert_eq!(format_2dp(-1e-12), "0.00");
        assert_eq!(format_2dp(123.456), "123.46");
    }

    #[test]
    fn percent() {
        assert_eq!(format_percent(0.6990), "69.90");
        assert_eq!(format_percent(1.0), "100.00");
        assert_eq!(format_percent(2.0 / 3.0), "66.67");
    }

    #[test]
    fn cents_roundtrip() {
        for c in -1000i64..=1000 {
            assert_eq!(to_cents(c as f64 / 100.0), c);
            assert_eq!(round_2dp(c as f64 / 100.0), c as f64 / 100.0);
        }
    }
}
