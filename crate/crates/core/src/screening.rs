//! Univariate screening of every variable against a binary target.
//!
//! Continuous columns get Welch's t test when neither class sample rejects
//! normality (Jarque–Bera at 0.05) and the Wilcoxon rank-sum test otherwise.
//! Boolean and categorical columns get a chi-square test when every expected
//! count exceeds 5, else Fisher's exact test (2x2 only).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::stats::{
    chi_square_test, fisher_exact_2x2, normality_check, welch_t_test, wilcoxon_rank_sum,
    ContingencyTable, StatsError, TestResult,
};
use crate::table::{Column, ColumnKind, ColumnTable, TableError};

/// Significance level of the normality pre-test.
pub const NORMALITY_ALPHA: f64 = 0.05;
/// Expected cell counts must exceed this for the chi-square branch.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ScreenError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("target {column:?} must have exactly 2 levels, found {levels:?}")]
    TargetNotBinary { column: String, levels: Vec<String> },
    #[error("column {column:?} has {count} missing cells")]
    MissingValues { column: String, count: usize },
    #[error("no test applies to {0} columns")]
    Unsupported(ColumnKind),
    #[error("alpha {0} outside (0, 1)")]
    Alpha(f64),
    #[error("column {column:?}: {source}")]
    Test {
        column: String,
        #[source]
        source: StatsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestChoice {
    WelchT,
    Wilcoxon,
    ChiSquare,
    Fisher,
}

impl TestChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            TestChoice::WelchT => "welch_t",
            TestChoice::Wilcoxon => "wilcoxon",
            TestChoice::ChiSquare => "chi_square",
            TestChoice::Fisher => "fisher",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Choice {
    pub test: TestChoice,
    pub warning: Option<String>,
}

/// Picks the test for one variable.
///
/// `normality_p` holds the normality p-values of the class samples
/// (continuous columns); `None` or a failed check counts as non-normal.
/// `expected` is the expected-count grid (categorical columns).
pub fn choose_test(
    kind: ColumnKind,
    normality_p: Option<&[f64]>,
    expected: Option<&[Vec<f64>]>,
) -> Result<Choice, ScreenError> {
    match kind {
        ColumnKind::Numeric => {
            let normal = normality_p
                .is_some_and(|ps| !ps.is_empty() && ps.iter().all(|&p| p >= NORMALITY_ALPHA));
            let test = if normal {
                TestChoice::WelchT
            } else {
                TestChoice::Wilcoxon
            };
            Ok(Choice {
                test,
                warning: None,
            })
        }
        ColumnKind::Boolean | ColumnKind::Categorical => {
            let grid = expected.unwrap_or_default();
            let sparse = grid.iter().flatten().any(|&e| e <= MIN_EXPECTED);
            let is_2x2 = grid.len() == 2 && grid.iter().all(|r| r.len() == 2);
            Ok(match (sparse, is_2x2) {
                (false, _) => Choice {
                    test: TestChoice::ChiSquare,
                    warning: None,
                },
                (true, true) => Choice {
                    test: TestChoice::Fisher,
                    warning: None,
                },
                (true, false) => Choice {
                    test: TestChoice::ChiSquare,
                    warning: Some(format!(
                        "expected count <= {MIN_EXPECTED} in a {}x{} table; chi-square approximation may be poor",
                        grid.len(),
                        grid.first().map_or(0, Vec::len)
                    )),
                },
            })
        }
        other => Err(ScreenError::Unsupported(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Important,
    Unimportant,
}

impl Decision {
    pub fn from_p(p_value: f64, alpha: f64) -> Decision {
        if p_value < alpha {
            Decision::Important
        } else {
            Decision::Unimportant
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Important => "important",
            Decision::Unimportant => "unimportant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningRow {
    pub variable: String,
    /// `welch_t`, `wilcoxon`, `chi_square`, `fisher`, `degenerate` or
    /// `unsupported`.
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub df: Option<f64>,
    pub decision: Decision,
    pub method_detail: String,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningReport {
    pub target: String,
    pub alpha: f64,
    pub rows: Vec<ScreeningRow>,
}

impl ScreeningReport {
    pub fn row(&self, variable: &str) -> Option<&ScreeningRow> {
        self.rows.iter().find(|r| r.variable == variable)
    }

    /// `Variable`, `Test-Statistic`, `P-value`, `Decision`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Variable\tTest-Statistic\tP-value\tDecision\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.variable,
                r.statistic,
                format_p(r.p_value),
                r.decision.as_str()
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("screening report serializes")
    }
}

fn format_p(p: f64) -> String {
    if p == 0.0 {
        "0".to_string()
    } else {
        format!("{p:.2E}")
    }
}

/// Class labels of a binary target, in sorted order, plus each row's class
/// index.
pub fn binary_target(
    t: &ColumnTable,
    target: &str,
) -> Result<([String; 2], Vec<usize>), ScreenError> {
    let col = t.require(target)?;
    let n_miss = col.n_missing();
    if n_miss > 0 {
        return Err(ScreenError::MissingValues {
            column: target.to_string(),
            count: n_miss,
        });
    }
    let rendered: Vec<String> = col
        .cells()
        .map(|c| c.render().unwrap_or_default())
        .collect();
    let levels: BTreeSet<&str> = rendered.iter().map(String::as_str).collect();
    if levels.len() != 2 {
        return Err(ScreenError::TargetNotBinary {
            column: target.to_string(),
            levels: levels.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut it = levels.iter();
    let labels = [
        it.next().expect("two levels").to_string(),
        it.next().expect("two levels").to_string(),
    ];
    let idx = rendered
        .iter()
        .map(|s| usize::from(*s == labels[1]))
        .collect();
    Ok((labels, idx))
}

fn fixed_row(variable: &str, test: &str, detail: String) -> ScreeningRow {
    ScreeningRow {
        variable: variable.to_string(),
        test: test.to_string(),
        statistic: 0.0,
        p_value: 1.0,
        df: None,
        decision: Decision::Unimportant,
        method_detail: detail,
        warning: None,
    }
}

fn from_result(variable: &str, choice: &Choice, r: TestResult, alpha: f64) -> ScreeningRow {
    ScreeningRow {
        variable: variable.to_string(),
        test: choice.test.as_str().to_string(),
        statistic: r.statistic,
        p_value: r.p_value,
        df: r.df,
        decision: Decision::from_p(r.p_value, alpha),
        method_detail: r.method_detail,
        warning: choice.warning.clone(),
    }
}

fn screen_numeric(
    col: &Column,
    values: &[Option<f64>],
    class: &[usize],
    alpha: f64,
) -> Result<ScreeningRow, ScreenError> {
    let name = col.name();
    let mut groups: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (v, &c) in values.iter().zip(class) {
        groups[c].push(v.expect("missing cells rejected earlier"));
    }
    let first = groups[0].first().or(groups[1].first()).copied();
    if groups.iter().flatten().all(|&v| Some(v) == first) {
        return Ok(fixed_row(name, "degenerate", "degenerate".into()));
    }
    let normality: Option<Vec<f64>> = groups
        .iter()
        .map(|g| normality_check(g).ok().map(|r| r.p_value))
        .collect();
    let choice = choose_test(ColumnKind::Numeric, normality.as_deref(), None)?;
    let wrap = |source| ScreenError::Test {
        column: name.to_string(),
        source,
    };
    let result = match choice.test {
        TestChoice::WelchT => welch_t_test(&groups[1], &groups[0]).map_err(wrap)?,
        _ => wilcoxon_rank_sum(&groups[1], &groups[0]).map_err(wrap)?,
    };
    Ok(from_result(name, &choice, result, alpha))
}

fn screen_categorical(
    col: &Column,
    class: &[usize],
    labels: &[String; 2],
    alpha: f64,
) -> Result<ScreeningRow, ScreenError> {
    let name = col.name();
    let keys: Vec<String> = col
        .cells()
        .map(|c| c.render().expect("missing cells rejected earlier"))
        .collect();
    let levels: Vec<&str> = keys
        .iter()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if levels.len() < 2 {
        return Ok(fixed_row(name, "degenerate", "degenerate".into()));
    }
    let mut counts = vec![vec![0u64; 2]; levels.len()];
    for (k, &c) in keys.iter().zip(class) {
        let i = levels
            .binary_search(&k.as_str())
            .expect("level collected above");
        counts[i][c] += 1;
    }
    let ct = ContingencyTable::with_labels(
        counts,
        levels.iter().map(|s| s.to_string()).collect(),
        labels.to_vec(),
    )
    .map_err(|source| ScreenError::Test {
        column: name.to_string(),
        source,
    })?;
    let expected = ct.expected();
    let choice = choose_test(col.kind(), None, expected.as_deref())?;
    let wrap = |source| ScreenError::Test {
        column: name.to_string(),
        source,
    };
    let result = match choice.test {
        TestChoice::Fisher => fisher_exact_2x2(&ct).map_err(wrap)?,
        _ => chi_square_test(&ct).map_err(wrap)?,
    };
    Ok(from_result(name, &choice, result, alpha))
}

/// Screens one column against precomputed target classes.
pub fn screen_column(
    col: &Column,
    class: &[usize],
    labels: &[String; 2],
    alpha: f64,
) -> Result<ScreeningRow, ScreenError> {
    let n_miss = col.n_missing();
    if n_miss > 0 {
        return Err(ScreenError::MissingValues {
            column: col.name().to_string(),
            count: n_miss,
        });
    }
    match col.kind() {
        ColumnKind::Numeric => screen_numeric(
            col,
            col.as_numeric().expect("numeric storage"),
            class,
            alpha,
        ),
        ColumnKind::Boolean | ColumnKind::Categorical => {
            screen_categorical(col, class, labels, alpha)
        }
        other => Ok(fixed_row(
            col.name(),
            "unsupported",
            format!("no test for {other} columns"),
        )),
    }
}

/// Screens every non-target column, in schema order. The table is not
/// modified.
pub fn screen_all(
    t: &ColumnTable,
    target: &str,
    alpha: f64,
) -> Result<ScreeningReport, ScreenError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ScreenError::Alpha(alpha));
    }
    let (labels, class) = binary_target(t, target)?;
    let rows = t
        .columns()
        .par_iter()
        .filter(|c| c.name() != target)
        .map(|c| screen_column(c, &class, &labels, alpha))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScreeningReport {
        target: target.to_string(),
        alpha,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    #[test]
    fn choice_rules() {
        let c = choose_test(ColumnKind::Numeric, Some(&[0.001, 0.5]), None).unwrap();
        assert_eq!(c.test, TestChoice::Wilcoxon);
        let c = choose_test(ColumnKind::Numeric, Some(&[0.2, 0.5]), None).unwrap();
        assert_eq!(c.test, TestChoice::WelchT);
        let c = choose_test(ColumnKind::Numeric, None, None).unwrap();
        assert_eq!(c.test, TestChoice::Wilcoxon);

        let grid = |m: f64| vec![vec![m, 10.0], vec![12.0, 20.0]];
        let c = choose_test(ColumnKind::Boolean, None, Some(&grid(8.2))).unwrap();
        assert_eq!(c.test, TestChoice::ChiSquare);
        let c = choose_test(ColumnKind::Boolean, None, Some(&grid(2.1))).unwrap();
        assert_eq!(c.test, TestChoice::Fisher);
        let wide = vec![vec![2.0, 9.0], vec![9.0, 9.0], vec![9.0, 9.0]];
        let c = choose_test(ColumnKind::Categorical, None, Some(&wide)).unwrap();
        assert_eq!(c.test, TestChoice::ChiSquare);
        assert!(c.warning.is_some());
        assert!(matches!(
            choose_test(ColumnKind::Text, None, None),
            Err(ScreenError::Unsupported(ColumnKind::Text))
        ));
    }

    #[test]
    fn perfect_association_is_important() {
        let y: Vec<Option<bool>> = (0..500).map(|i| Some(i % 3 == 0)).collect();
        let target: Vec<Option<String>> = y
            .iter()
            .map(|b| Some(if b.unwrap() { "severe" } else { "less severe" }.to_string()))
            .collect();
        let t = ColumnTable::new(vec![
            Column::boolean("x", y),
            Column::categorical("Severity", target),
            Column::numeric("k", vec![Some(1.0); 500]),
        ])
        .unwrap();
        let r = screen_all(&t, "Severity", 0.05).unwrap();
        let x = r.row("x").unwrap();
        assert_eq!(x.test, "chi_square");
        assert!(x.p_value < 1e-10);
        assert_eq!(x.decision, Decision::Important);
        let k = r.row("k").unwrap();
        assert_eq!(k.method_detail, "degenerate");
        assert_eq!(k.decision, Decision::Unimportant);
        assert_eq!(r.rows.len(), 2);
        assert!(r
            .to_tsv()
            .starts_with("Variable\tTest-Statistic\tP-value\tDecision\n"));
    }

    #[test]
    fn target_and_missing_errors() {
        let t = ColumnTable::new(vec![
            Column::from_strs("y", &[Some("a"), Some("b"), Some("c")]),
            Column::numeric("x", vec![Some(1.0), Some(2.0), Some(3.0)]),
        ])
        .unwrap();
        assert!(matches!(
            screen_all(&t, "y", 0.05),
            Err(ScreenError::TargetNotBinary { .. })
        ));
        let t = ColumnTable::new(vec![
            Column::from_strs("y", &[Some("a"), Some("b"), Some("a")]),
            Column::numeric("x", vec![Some(1.0), None, Some(3.0)]),
        ])
        .unwrap();
        assert!(matches!(
            screen_all(&t, "y", 0.05),
            Err(ScreenError::MissingValues { .. })
        ));
    }

    #[test]
    fn small_sparse_boolean_uses_fisher() {
        let t = ColumnTable::new(vec![
            Column::from_strs(
                "y",
                &[
                    Some("a"),
                    Some("a"),
                    Some("a"),
                    Some("b"),
                    Some("b"),
                    Some("b"),
                ],
            ),
            Column::boolean(
                "x",
                vec![
                    Some(true),
                    Some(true),
                    Some(true),
                    Some(false),
                    Some(false),
                    Some(false),
                ],
            ),
        ])
        .unwrap();
        let r = screen_all(&t, "y", 0.05).unwrap();
        assert_eq!(r.rows[0].test, "fisher");
        assert!((r.rows[0].p_value - 0.1).abs() < 1e-12);
    }
}
