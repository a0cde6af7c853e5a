//! Gaussian tail probability.

/// `Q(x) = P(N(0,1) > x)`, evaluated as `erfc(x/√2)/2`.
///
/// Total on finite inputs. For `x` beyond roughly 38.5 the true value is
/// below the smallest subnormal `f64` and the result is exactly zero.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Chernoff-style upper bound `Q(x) ≤ ½ exp(−x²/2)`, valid for `x ≥ 0`.
pub fn q_chernoff(x: f64) -> f64 {
    0.5 * (-0.5 * x * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson quadrature of the standard normal density over
    /// `[x, x + 40]`; the tail beyond is below 1e-300.
    fn q_quadrature(x: f64) -> f64 {
        let n = 200_000;
        let h = 40.0 / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = pdf(x) + pdf(x + 40.0);
        for i in 1..n {
            let t = x + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(t);
        }
        s * h / 3.0
    }

    #[test]
    fn zero_is_half() {
        assert_eq!(q_function(0.0), 0.5);
    }

    #[test]
    fn matches_quadrature() {
        for &x in &[0.0, 0.3, 1.0, 2.0, 3.0, 5.0] {
            let q = q_function(x);
            let oracle = q_quadrature(x);
            assert!((q - oracle).abs() <= 1e-12, "x={x}: {q} vs {oracle}");
        }
    }

    #[test]
    fn frozen_reference_values() {
        // values from the quadrature oracle above, frozen
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((q_function(2.0) - 0.022_750_131_948_179_21).abs() < 1e-15);
        assert!((q_function(3.0) - 0.001_349_898_031_630_095).abs() < 1e-16);
    }

    #[test]
    fn q_one_below_chernoff() {
        assert!(q_function(1.0) <= 0.5 * (-0.5_f64).exp());
        assert!((q_chernoff(1.0) - 0.303_265_329_856_316_7).abs() < 1e-15);
    }

    #[test]
    fn deep_tail_does_not_crash() {
        let q = q_function(37.5);
        assert!(q > 0.0 && q <= 1e-300, "{q}");
        let q40 = q_function(40.0);
        assert!(q40.is_finite() && (0.0..=1e-300).contains(&q40));
        assert_eq!(q_function(f64::INFINITY), 0.0);
    }

    proptest! {
        #[test]
        fn symmetric_about_half(x in -30.0f64..30.0) {
            prop_assert!((q_function(x) + q_function(-x) - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn strictly_decreasing(x in -8.0f64..8.0, dx in 1e-6f64..1.0) {
            prop_assert!(q_function(x + dx) < q_function(x));
        }

        #[test]
        fn chernoff_dominates(x in 0.0f64..35.0) {
            prop_assert!(q_function(x) <= q_chernoff(x));
        }
    }
}
