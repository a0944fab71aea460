//! Small hypothesis-testing helpers for the Monte-Carlo checks.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub rejected: bool,
}

/// Pearson chi-square test that `ones` out of `total` fair coin flips is
/// consistent with probability 1/2 (one degree of freedom).
pub fn chi_square_fair_bit(ones: u64, total: u64, significance: f64) -> TestOutcome {
    assert!(total > 0, "chi-square on an empty sample");
    let expected = total as f64 / 2.0;
    let zeros = (total - ones) as f64;
    let statistic =
        (ones as f64 - expected).powi(2) / expected + (zeros - expected).powi(2) / expected;
    let dist = ChiSquared::new(1.0).expect("one degree of freedom");
    let p_value = 1.0 - dist.cdf(statistic);
    TestOutcome {
        statistic,
        p_value,
        rejected: p_value < significance,
    }
}

/// Two-sided pooled two-proportion z-test of `x1/n1` against `x2/n2`.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64, significance: f64) -> TestOutcome {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let diff = x1 as f64 / n1f - x2 as f64 / n2f;
    let statistic = if se == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / se
    };
    let normal = Normal::standard();
    let p_value = 2.0 * (1.0 - normal.cdf(statistic.abs()));
    TestOutcome {
        statistic,
        p_value,
        rejected: p_value < significance,
    }
}

/// Standard deviation of a binomial proportion estimate.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Whether `successes/trials` lies within `k` binomial sigmas of `p`.
pub fn within_sigmas(successes: u64, trials: u64, p: f64, k: f64) -> bool {
    let observed = successes as f64 / trials as f64;
    let sigma = binomial_sigma(p, trials);
    if sigma == 0.0 {
        return (observed - p).abs() < 1e-12;
    }
    (observed - p).abs() <= k * sigma
}

/// Closed-form probability that `decoys` independent decoys catch an
/// intercept-resend attacker who guesses bases uniformly.
pub fn intercept_detection_probability(decoys: u32) -> f64 {
    1.0 - 0.75f64.powi(decoys as i32)
}
