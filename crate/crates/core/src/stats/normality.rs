use super::dist::{tail, Distribution};
use super::{StatsError, TestResult};
use crate::rng;

/// Samples larger than this are tested on a fixed-seed random subsample.
pub const NORMALITY_SUBSAMPLE_CAP: usize = 5_000;
const SUBSAMPLE_SEED: u64 = 0x4a42_5f53_5542;

/// Jarque–Bera normality test: `JB = n/6 (S^2 + K^2/4)` with sample skewness
/// `S` and excess kurtosis `K`; p from chi-square with 2 df.
pub fn normality_check(x: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() < 8 {
        return Err(StatsError::TooFewValues {
            name: "x",
            needed: 8,
            got: x.len(),
        });
    }
    let sub: Vec<f64>;
    let data = if x.len() > NORMALITY_SUBSAMPLE_CAP {
        let idx = rng::sample_without_replacement(
            x.len(),
            NORMALITY_SUBSAMPLE_CAP,
            &mut rng::seeded(SUBSAMPLE_SEED),
        );
        sub = idx.into_iter().map(|i| x[i]).collect();
        &sub[..]
    } else {
        x
    };
    if data.iter().all(|v| *v == data[0]) {
        return Err(StatsError::ConstantSample);
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in data {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2) - 3.0;
    let jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
    let p = tail(Distribution::ChiSquare(2.0), jb)?;
    let detail = if data.len() < x.len() {
        format!("Jarque-Bera on {} of {} values", data.len(), x.len())
    } else {
        "Jarque-Bera".to_string()
    };
    Ok(TestResult::new("jarque_bera", jb, p, Some(2.0), detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_hundred() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let r = normality_check(&x).unwrap();
        assert!((r.statistic - 6.00).abs() < 1e-2, "{}", r.statistic);
        assert!((r.p_value - 0.050).abs() < 1e-3, "{}", r.p_value);
    }

    #[test]
    fn constant_and_short() {
        assert_eq!(normality_check(&[3.0; 20]), Err(StatsError::ConstantSample));
        assert!(normality_check(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn affine_invariant() {
        let x: Vec<f64> = (0..50)
            .map(|i| ((i * 37) % 11) as f64 + (i as f64).sqrt())
            .collect();
        let y: Vec<f64> = x.iter().map(|v| 3.5 * v - 20.0).collect();
        let a = normality_check(&x).unwrap();
        let b = normality_check(&y).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-9);
    }

    #[test]
    fn large_sample_is_subsampled_deterministically() {
        let x: Vec<f64> = (0..20_000).map(|i| ((i * 7919) % 1000) as f64).collect();
        let a = normality_check(&x).unwrap();
        let b = normality_check(&x).unwrap();
        assert_eq!(a, b);
        assert!(a.method_detail.contains("5000 of 20000"));
    }
}
