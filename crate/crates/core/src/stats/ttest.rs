use super::dist::{tail, Distribution};
use super::{StatsError, TestResult};

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Welch's unequal-variance two-sample t test, two-sided.
pub fn welch_t_test(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() < 2 {
        return Err(StatsError::TooFewValues {
            name: "x",
            needed: 2,
            got: x.len(),
        });
    }
    if y.len() < 2 {
        return Err(StatsError::TooFewValues {
            name: "y",
            needed: 2,
            got: y.len(),
        });
    }
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    if se2 <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let t = (mx - my) / se2.sqrt();
    let df = se2 * se2 / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    let p = (2.0 * tail(Distribution::StudentT(df), t.abs())?).min(1.0);
    Ok(TestResult::new(
        "welch_t",
        t,
        p,
        Some(df),
        "Welch-Satterthwaite degrees of freedom",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn shifted_by_one() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.statistic + 1.224744871391589).abs() < 1e-12);
        assert!((r.df.unwrap() - 4.0).abs() < 1e-12);
        // P(|T_4| > 1.2247): T_4 cdf is closed form,
        // F(t) = 1/2 + t(t^2+6) / (2 (t^2+4)^{3/2})
        let t: f64 = 1.224744871391589;
        let cdf = 0.5 + t * (t * t + 6.0) / (2.0 * (t * t + 4.0).powf(1.5));
        assert!((r.p_value - 2.0 * (1.0 - cdf)).abs() < 1e-8);
        assert!((r.p_value - 0.288).abs() < 1e-3);
    }

    #[test]
    fn degenerate() {
        assert_eq!(
            welch_t_test(&[0.0, 0.0], &[0.0, 0.0]),
            Err(StatsError::DegenerateVariance)
        );
        assert!(welch_t_test(&[1.0], &[0.0, 2.0]).is_err());
    }
}
