use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use super::dist::{tail, Distribution};
use super::{StatsError, TestResult};

/// r x c grid of counts with labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|r| r.len() != cols) {
            return Err(StatsError::InvalidParameter(
                "ragged contingency table".into(),
            ));
        }
        Ok(ContingencyTable {
            row_labels: (0..rows).map(|i| i.to_string()).collect(),
            col_labels: (0..cols).map(|j| j.to_string()).collect(),
            counts,
        })
    }

    pub fn with_labels(
        counts: Vec<Vec<u64>>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Result<Self, StatsError> {
        let mut t = ContingencyTable::new(counts)?;
        if row_labels.len() != t.rows() || col_labels.len() != t.cols() {
            return Err(StatsError::InvalidParameter("label count mismatch".into()));
        }
        t.row_labels = row_labels;
        t.col_labels = col_labels;
        Ok(t)
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.row_totals().iter().sum()
    }

    /// Expected counts under independence; `None` when a marginal is zero.
    pub fn expected(&self) -> Option<Vec<Vec<f64>>> {
        let rt = self.row_totals();
        let ct = self.col_totals();
        if rt.contains(&0) || ct.contains(&0) {
            return None;
        }
        let n = self.total() as f64;
        Some(
            rt.iter()
                .map(|&r| ct.iter().map(|&c| r as f64 * c as f64 / n).collect())
                .collect(),
        )
    }

    pub fn transpose(&self) -> ContingencyTable {
        let counts = (0..self.cols())
            .map(|j| self.counts.iter().map(|r| r[j]).collect())
            .collect();
        ContingencyTable {
            counts,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }
}

/// Pearson chi-square test of independence. On 2x2 tables each cell
/// deviation is reduced by `min(0.5, |O - E|)` (Yates).
pub fn chi_square_test(ct: &ContingencyTable) -> Result<TestResult, StatsError> {
    let (r, c) = (ct.rows(), ct.cols());
    if r < 2 || c < 2 {
        return Err(StatsError::Shape {
            expected: "at least 2x2",
            rows: r,
            cols: c,
        });
    }
    let expected = ct.expected().ok_or(StatsError::ZeroMarginal)?;
    let yates = r == 2 && c == 2;
    let mut stat = 0.0;
    for (obs_row, exp_row) in ct.counts().iter().zip(&expected) {
        for (&o, &e) in obs_row.iter().zip(exp_row) {
            let mut dev = (o as f64 - e).abs();
            if yates {
                dev -= dev.min(0.5);
            }
            stat += dev * dev / e;
        }
    }
    let df = ((r - 1) * (c - 1)) as f64;
    let p = tail(Distribution::ChiSquare(df), stat)?;
    let detail = if yates {
        "Pearson, Yates corrected"
    } else {
        "Pearson"
    };
    Ok(TestResult::new("chi_square", stat, p, Some(df), detail))
}

/// Two-sided Fisher exact test on a 2x2 table: sums the hypergeometric
/// probabilities of all tables with the observed marginals that are no more
/// probable than the observed one (relative slack 1e-7).
///
/// The reported statistic is the sample odds ratio `ad / bc`, with 0.5 added
/// to every cell when any cell is zero.
pub fn fisher_exact_2x2(ct: &ContingencyTable) -> Result<TestResult, StatsError> {
    if ct.rows() != 2 || ct.cols() != 2 {
        return Err(StatsError::Shape {
            expected: "2x2",
            rows: ct.rows(),
            cols: ct.cols(),
        });
    }
    let m = ct.counts();
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let odds = if a == 0 || b == 0 || c == 0 || d == 0 {
        (a as f64 + 0.5) * (d as f64 + 0.5) / ((b as f64 + 0.5) * (c as f64 + 0.5))
    } else {
        (a as f64 * d as f64) / (b as f64 * c as f64)
    };

    let r1 = a + b;
    let r2 = c + d;
    let c1 = a + c;
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    // log P(top-left = k) up to the constant -ln C(n, c1)
    let logp = |k: u64| ln_binomial(r1, k) + ln_binomial(r2, c1 - k);
    let max_log = (lo..=hi).map(logp).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = (lo..=hi).map(|k| (logp(k) - max_log).exp()).collect();
    let observed = weights[(a - lo) as usize];
    let total: f64 = weights.iter().sum();
    let cutoff = observed * (1.0 + 1e-7);
    let extreme: f64 = weights.iter().filter(|&&w| w <= cutoff).sum();
    Ok(TestResult::new(
        "fisher",
        odds,
        (extreme / total).min(1.0),
        None,
        "exact two-sided (probability-mass rule)",
    ))
}
