//! Hypothesis tests and distribution tails.
//!
//! Two-sample location tests (Wilcoxon rank-sum, Welch t), a moment-based
//! normality check (Jarque–Bera), contingency-table tests (Pearson
//! chi-square with Yates correction, Fisher exact), an exact binomial tail
//! test and Clopper–Pearson intervals. All functions are pure.

mod binomial;
mod contingency;
mod dist;
mod normality;
mod rank;
mod ttest;

use serde::Serialize;
use thiserror::Error;

pub use binomial::{
    binomial_lower_tail, binomial_tail_test, binomial_upper_tail, clopper_pearson, Interval,
};
pub use contingency::{chi_square_test, fisher_exact_2x2, ContingencyTable};
pub use dist::{normal_quantile, tail, Distribution};
pub use normality::{normality_check, NORMALITY_SUBSAMPLE_CAP};
pub use rank::{
    midranks, rank_sum_normal_z, wilcoxon_rank_sum, wilcoxon_rank_sum_with, RankSumMethod,
    EXACT_RANK_SUM_MAX_N,
};
pub use ttest::welch_t_test;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample {0} is empty")]
    EmptySample(&'static str),
    #[error("sample {name} needs at least {needed} values, got {got}")]
    TooFewValues {
        name: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("both samples have zero variance")]
    DegenerateVariance,
    #[error("sample is constant")]
    ConstantSample,
    #[error("contingency table has a zero row or column total")]
    ZeroMarginal,
    #[error("expected a {expected} table, got {rows}x{cols}")]
    Shape {
        expected: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exact distribution unavailable: {0}")]
    ExactUnavailable(String),
}

/// Outcome of one statistical test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub test_name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<f64>,
    pub method_detail: String,
}

impl TestResult {
    pub(crate) fn new(
        test_name: &str,
        statistic: f64,
        p_value: f64,
        df: Option<f64>,
        method_detail: impl Into<String>,
    ) -> Self {
        TestResult {
            test_name: test_name.to_string(),
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            df,
            method_detail: method_detail.into(),
        }
    }
}
