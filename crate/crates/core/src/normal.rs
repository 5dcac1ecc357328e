//! Standard normal distribution function and its logarithm.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Beyond this point `erfc` is evaluated through the asymptotic tail series.
const LOG_TAIL_SWITCH: f64 = 30.0;

/// Standard normal CDF, `Φ(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `log Φ(x)`, accurate far into the lower tail where `Φ` underflows.
pub fn log_cdf(x: f64) -> f64 {
    if x > -LOG_TAIL_SWITCH {
        cdf(x).ln()
    } else {
        // Mills ratio expansion: Φ(x) = φ(x)/|x| · (1 - 1/x² + 3/x⁴ - 15/x⁶ + 105/x⁸ ...)
        let y = -x;
        let inv2 = 1.0 / (y * y);
        let series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
        -0.5 * y * y - 0.5 * (2.0 * PI).ln() - y.ln() + series.ln()
    }
}

/// `exp(a) · Φ(-y)` for `y ≥ 0`, combined in log space once `a` is large
/// enough that the naive product would overflow or cancel badly.
pub fn exp_times_upper_tail(a: f64, y: f64) -> f64 {
    if a < LOG_TAIL_SWITCH && y < LOG_TAIL_SWITCH {
        a.exp() * cdf(-y)
    } else {
        (a + log_cdf(-y)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // high-precision references (mpmath, 30 digits)
        let cases = [
            (0.0, 0.5),
            (1.0, 0.841_344_746_068_542_9),
            (-1.0, 0.158_655_253_931_457_05),
            (-3.0, 1.349_898_031_630_094_6e-3),
            (-6.0, 9.865_876_450_376_98e-10),
            (-10.0, 7.619_853_024_160_527e-24),
            (-20.0, 2.753_624_118_606_233_7e-89),
        ];
        // libm's erfc is good to a few ulps near the centre and ~1.5e-14 relative at x = -20
        for (x, want) in cases {
            let got = cdf(x);
            let tol = if x >= -3.0 { 2e-15 } else { 2e-14 };
            assert!(((got - want) / want).abs() < tol, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn log_cdf_is_continuous_at_the_switch() {
        // both branches against mpmath, one on each side of the switch
        assert!((log_cdf(-29.0) - (-424.787_419_909_730_16)).abs() < 1e-11);
        assert!((log_cdf(-31.0) - (-484.853_963_627_179_3)).abs() < 1e-11);
        let below = log_cdf(-LOG_TAIL_SWITCH - 1e-9);
        let above = log_cdf(-LOG_TAIL_SWITCH + 1e-9);
        // slope of log Φ at -30 is about 30
        assert!((below - above + 30.03 * 2e-9).abs() < 1e-9, "{below} vs {above}");
        // log Φ(-40) from mpmath
        assert!((log_cdf(-40.0) - (-804.608_442_013_754_4)).abs() < 1e-9);
    }

    #[test]
    fn tail_product_matches_naive_where_both_work() {
        for &(a, y) in &[(1.0, 2.0), (10.0, 5.0), (25.0, 7.5)] {
            let naive = f64::exp(a) * cdf(-y);
            let got = exp_times_upper_tail(a, y);
            assert!(((got - naive) / naive).abs() < 1e-13);
        }
        // a large, y large: the naive form overflows to inf * 0
        let v = exp_times_upper_tail(800.0, 40.0);
        assert!(v.is_finite() && v > 0.0);
    }
}
