//! Small statistical helpers: exact binomial intervals, the normal CDF and
//! weighted least-squares slopes.

use statrs::distribution::{Beta, Continuous, ContinuousCDF, Normal};

/// Confidence level of every reported interval.
pub const CONFIDENCE: f64 = 0.99;

/// Two-sided Clopper–Pearson interval at `conf` for `hits` out of `n`.
/// With zero hits (all hits) the one-sided bound `1 − (1−conf)^{1/n}`
/// (`(1−conf)^{1/n}`) is used, the exact generalization of the rule of three.
pub fn clopper_pearson(hits: u64, n: u64, conf: f64) -> (f64, f64) {
    assert!(n > 0 && hits <= n, "need 0 ≤ hits ≤ n, n > 0");
    let alpha = 1.0 - conf;
    let nf = n as f64;
    let k = hits as f64;
    if hits == 0 {
        return (0.0, -f64::exp_m1(alpha.ln() / nf));
    }
    if hits == n {
        return (f64::exp(alpha.ln() / nf), 1.0);
    }
    (beta_quantile(k, nf - k + 1.0, alpha / 2.0), beta_quantile(k + 1.0, nf - k, 1.0 - alpha / 2.0))
}

/// Beta quantile: the library inverse polished by Newton steps on the CDF,
/// which is far more accurate than the inverse for very unequal shapes.
fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    let dist = Beta::new(a, b).expect("positive shapes");
    let mut x = dist.inverse_cdf(p);
    for _ in 0..50 {
        let step = (dist.cdf(x) - p) / dist.pdf(x);
        if !step.is_finite() {
            break;
        }
        let next = (x - step).clamp(0.5 * x, 0.5 * (x + 1.0));
        let done = (next - x).abs() <= 1e-15 * x;
        x = next;
        if done {
            break;
        }
    }
    x
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Two-sided standard normal quantile for confidence `conf` (2.576 at 99%).
pub fn normal_quantile(conf: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + conf / 2.0)
}

/// Weighted least-squares slope of `y` on `x` and its standard error
/// `1/√(Σw(x − x̄)²)` under known variances `1/w`.
pub fn weighted_slope(x: &[f64], y: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 || x.len() != y.len() || x.len() != w.len() {
        return None;
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - xm) * (c - ym)).sum();
    Some((sxy / sxx, 1.0 / sxx.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn clopper_pearson_reference_values() {
        let cases = [
            (3, 100, 0.0034070701031797567, 0.10548125372507824),
            (50, 1000, 0.033926662710220275, 0.07050437520145812),
            (1, 1_000_000, 5.012541810981494e-09, 7.430105611978525e-06),
            (999, 1000, 0.992593713061647, 0.9999949874707392),
            (5, 1_000_000, 1.0779298155476226e-06, 1.4149694677661562e-05),
        ];
        for (k, n, lo, hi) in cases {
            let (l, h) = clopper_pearson(k, n, 0.99);
            assert_relative_eq!(l, lo, max_relative = 1e-8);
            assert_relative_eq!(h, hi, max_relative = 1e-8);
        }
    }

    #[test]
    fn degenerate_counts() {
        let (lo, hi) = clopper_pearson(0, 1000, 0.99);
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 1.0 - 0.01f64.powf(1e-3), max_relative = 1e-12);
        let (lo, hi) = clopper_pearson(1000, 1000, 0.99);
        assert_eq!(hi, 1.0);
        assert_relative_eq!(lo, 0.01f64.powf(1e-3), max_relative = 1e-12);
    }

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 2.0 * v).collect();
        let (b, se) = weighted_slope(&x, &y, &[1.0, 2.0, 1.0, 3.0]).unwrap();
        assert_relative_eq!(b, -2.0, epsilon = 1e-12);
        assert!(se > 0.0);
        assert_relative_eq!(normal_quantile(0.99), 2.5758293035489, epsilon = 1e-9);
    }
}
