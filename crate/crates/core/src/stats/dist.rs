use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Normal,
    ChiSquare(f64),
    StudentT(f64),
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Upper-tail probability `P(X > statistic)`.
pub fn tail(dist: Distribution, statistic: f64) -> Result<f64, StatsError> {
    if statistic.is_nan() {
        return Err(StatsError::InvalidParameter("statistic is NaN".into()));
    }
    let p = match dist {
        Distribution::Normal => std_normal().sf(statistic),
        Distribution::ChiSquare(df) => {
            check_df(df)?;
            if statistic <= 0.0 {
                1.0
            } else {
                ChiSquared::new(df)
                    .map_err(|e| StatsError::InvalidParameter(e.to_string()))?
                    .sf(statistic)
            }
        }
        Distribution::StudentT(df) => {
            check_df(df)?;
            StudentsT::new(0.0, 1.0, df)
                .map_err(|e| StatsError::InvalidParameter(e.to_string()))?
                .sf(statistic)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

fn check_df(df: f64) -> Result<(), StatsError> {
    if df.is_finite() && df > 0.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidParameter(format!(
            "degrees of freedom {df}"
        )))
    }
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Two-sided normal p-value for a z score.
pub(crate) fn two_sided_normal(z: f64) -> f64 {
    (2.0 * std_normal().sf(z.abs())).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table_values() {
        // 1.959963984540054 is the 0.975 normal quantile to 16 digits
        let p = tail(Distribution::Normal, 1.959963984540054).unwrap();
        assert!((p - 0.025).abs() < 1e-10, "{p}");
        // chi-square(1) 0.95 quantile 3.841458820694124
        let p = tail(Distribution::ChiSquare(1.0), 3.841458820694124).unwrap();
        assert!((p - 0.05).abs() < 1e-8, "{p}");
        assert_eq!(tail(Distribution::StudentT(1.0), 0.0).unwrap(), 0.5);
    }

    #[test]
    fn t_tail_matches_closed_forms() {
        // df=1 is Cauchy: P(T > x) = 1/2 - atan(x)/pi
        for x in [0.3, 1.0, 4.0, 25.0] {
            let p = tail(Distribution::StudentT(1.0), x).unwrap();
            let exact = 0.5 - x.atan() / std::f64::consts::PI;
            assert!((p - exact).abs() < 1e-8, "x={x}: {p} vs {exact}");
        }
        // df=2: P(T > x) = 1/2 - x / (2 sqrt(x^2 + 2))
        for x in [0.5, 2.0, 10.0] {
            let p = tail(Distribution::StudentT(2.0), x).unwrap();
            let exact = 0.5 - x / (2.0 * (x * x + 2.0).sqrt());
            assert!((p - exact).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn chi_square_closed_forms() {
        // df=2 is exponential with mean 2
        for x in [0.1, 1.0, 7.5, 40.0] {
            let p = tail(Distribution::ChiSquare(2.0), x).unwrap();
            assert!((p - (-x / 2.0).exp()).abs() < 1e-8);
        }
        // df=1: P(X > x) = 2 * P(Z > sqrt(x))
        for x in [0.2, 3.0, 12.0] {
            let p = tail(Distribution::ChiSquare(1.0), x).unwrap();
            let z = tail(Distribution::Normal, x.sqrt()).unwrap();
            assert!((p - 2.0 * z).abs() < 1e-8);
        }
    }

    #[test]
    fn large_df_t_approaches_normal() {
        let t = tail(Distribution::StudentT(1e6), 1.96).unwrap();
        let z = tail(Distribution::Normal, 1.96).unwrap();
        assert!((t - z).abs() < 1e-6);
    }

    #[test]
    fn invalid_df() {
        assert!(tail(Distribution::ChiSquare(0.0), 1.0).is_err());
        assert!(tail(Distribution::StudentT(-2.0), 1.0).is_err());
        assert!(tail(Distribution::Normal, f64::NAN).is_err());
    }
}
