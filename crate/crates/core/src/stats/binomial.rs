use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use super::{StatsError, TestResult};

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn check(successes: u64, n: u64, p: f64) -> Result<(), StatsError> {
    if successes > n {
        return Err(StatsError::InvalidParameter(format!(
            "successes {successes} exceed trials {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidParameter(format!("probability {p}")));
    }
    Ok(())
}

fn ln_pmf(j: u64, n: u64, p: f64) -> f64 {
    ln_binomial(n, j) + j as f64 * p.ln() + (n - j) as f64 * (-p).ln_1p()
}

/// Sums pmf terms starting at `start` and walking away from the mode in
/// direction `step` (+1 up to n, -1 down to 0). Terms shrink monotonically
/// along the walk, so the loop stops once they fall below double precision.
fn walk_sum(start: u64, n: u64, p: f64, upward: bool) -> f64 {
    let q = 1.0 - p;
    let log_first = ln_pmf(start, n, p);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut j = start;
    loop {
        if upward {
            if j == n {
                break;
            }
            term *= (n - j) as f64 / (j + 1) as f64 * (p / q);
            j += 1;
        } else {
            if j == 0 {
                break;
            }
            term *= j as f64 / (n - j + 1) as f64 * (q / p);
            j -= 1;
        }
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    (log_first + sum.ln()).exp()
}

/// `P(X >= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    check(k, n, p)?;
    if k == 0 || p == 1.0 {
        return Ok(1.0);
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let mean = n as f64 * p;
    let v = if k as f64 > mean {
        walk_sum(k, n, p, true)
    } else {
        1.0 - walk_sum(k - 1, n, p, false)
    };
    Ok(v.clamp(0.0, 1.0))
}

/// `P(X <= k)` for `X ~ Binomial(n, p)`.
pub fn binomial_lower_tail(k: u64, n: u64, p: f64) -> Result<f64, StatsError> {
    check(k, n, p)?;
    binomial_upper_tail(n - k, n, 1.0 - p)
}

/// One-sided exact test of `H1: p > p0`: `P(X >= successes)`.
pub fn binomial_tail_test(successes: u64, n: u64, p0: f64) -> Result<TestResult, StatsError> {
    let p = binomial_upper_tail(successes, n, p0)?;
    Ok(TestResult::new(
        "binomial",
        successes as f64,
        p,
        None,
        format!("exact one-sided P(X >= {successes}) under Binomial({n}, {p0})"),
    ))
}

/// Root of a monotone function on [0, 1] by bisection.
fn bisect<F: Fn(f64) -> f64>(f: F, target: f64, increasing: bool) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = f(mid) > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) binomial confidence interval.
///
/// The bounds are the beta quantiles `B(a/2; k, n-k+1)` and
/// `B(1-a/2; k+1, n-k)`, found by inverting the equivalent binomial tails
/// `P(X >= k | p) = a/2` and `P(X <= k | p) = a/2`.
pub fn clopper_pearson(successes: u64, n: u64, confidence: f64) -> Result<Interval, StatsError> {
    if n == 0 {
        return Err(StatsError::InvalidParameter("zero trials".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidParameter(format!(
            "confidence {confidence}"
        )));
    }
    check(successes, n, 0.5)?;
    let half = (1.0 - confidence) / 2.0;
    let lower = if successes == 0 {
        0.0
    } else {
        bisect(
            |p| binomial_upper_tail(successes, n, p).unwrap_or(f64::NAN),
            half,
            true,
        )
    };
    let upper = if successes == n {
        1.0
    } else {
        bisect(
            |p| binomial_lower_tail(successes, n, p).unwrap_or(f64::NAN),
            half,
            false,
        )
    };
    Ok(Interval { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sums() {
        let r = binomial_tail_test(9, 10, 0.5).unwrap();
        assert!((r.p_value - 11.0 / 1024.0).abs() < 1e-14);
        let r = binomial_tail_test(5, 10, 0.5).unwrap();
        assert!((r.p_value - 638.0 / 1024.0).abs() < 1e-14);
        assert_eq!(binomial_tail_test(10, 10, 1.0).unwrap().p_value, 1.0);
    }

    #[test]
    fn invalid_bounds() {
        assert!(binomial_tail_test(11, 10, 0.5).is_err());
        assert!(binomial_tail_test(1, 10, 1.5).is_err());
        assert!(clopper_pearson(3, 2, 0.95).is_err());
    }

    #[test]
    fn boundary_intervals() {
        let i = clopper_pearson(0, 10, 0.95).unwrap();
        assert_eq!(i.lower, 0.0);
        assert!((i.upper - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-10);
        assert!((i.upper - 0.3085).abs() < 1e-4);
        let i = clopper_pearson(10, 10, 0.95).unwrap();
        assert_eq!(i.upper, 1.0);
        assert!((i.lower - 0.025f64.powf(0.1)).abs() < 1e-10);
    }

    #[test]
    fn tails_sum_to_one() {
        for (k, n, p) in [
            (3u64, 20u64, 0.3),
            (0, 5, 0.9),
            (40, 100, 0.41),
            (700, 1000, 0.69),
        ] {
            let up = binomial_upper_tail(k + 1, n, p).unwrap();
            let lo = binomial_lower_tail(k, n, p).unwrap();
            assert!((up + lo - 1.0).abs() < 1e-12, "{k} {n} {p}");
        }
    }

    #[test]
    fn large_n_is_finite_and_ordered() {
        let i = clopper_pearson(812_000, 1_000_000, 0.95).unwrap();
        assert!(i.lower < 0.812 && 0.812 < i.upper);
        assert!(i.upper - i.lower < 0.002);
    }
}
