//! Seeded train/test splits and class rebalancing.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{
    sample_with_replacement, sample_without_replacement, seeded, shuffle, stream, SeededRng,
};
use crate::table::{ColumnTable, TableError};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("need at least 3 rows to split, got {0}")]
    TooFewRows(usize),
    #[error("ratio {0} outside (0, 1)")]
    Ratio(f64),
    #[error("target ratio {0} outside (0, 1]")]
    TargetRatio(f64),
    #[error("split leaves the {0} partition empty")]
    EmptyPartition(&'static str),
    #[error("column {column:?} has missing cells")]
    MissingLabels { column: String },
    #[error("column {column:?} must have 2 classes, found {levels:?}")]
    NotBinary { column: String, levels: Vec<String> },
    #[error("unknown rebalance mode {0:?}")]
    Mode(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: ColumnTable,
    pub test: ColumnTable,
    /// Source row indices of each partition, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Row indices grouped by rendered label, labels in sorted order.
pub fn rows_by_label(
    t: &ColumnTable,
    column: &str,
) -> Result<BTreeMap<String, Vec<usize>>, PartitionError> {
    let col = t.require(column)?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (r, cell) in col.cells().enumerate() {
        let key = cell.render().ok_or_else(|| PartitionError::MissingLabels {
            column: column.to_string(),
        })?;
        groups.entry(key).or_default().push(r);
    }
    Ok(groups)
}

fn split_indices(
    mut rows: Vec<usize>,
    ratio: f64,
    rng: &mut SeededRng,
) -> (Vec<usize>, Vec<usize>) {
    shuffle(&mut rows, rng);
    let n_train = (ratio * rows.len() as f64).round() as usize;
    let test = rows.split_off(n_train);
    (rows, test)
}

/// Shuffles the rows and sends the first `round(ratio * N)` to train. With
/// `stratify`, each class is split separately and the parts recombined.
pub fn train_test_split(
    t: &ColumnTable,
    ratio: f64,
    seed: u64,
    stratify: Option<&str>,
) -> Result<SplitResult, PartitionError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(PartitionError::Ratio(ratio));
    }
    let n = t.row_count();
    if n < 3 {
        return Err(PartitionError::TooFewRows(n));
    }
    let (mut train_rows, mut test_rows) = match stratify {
        None => split_indices((0..n).collect(), ratio, &mut seeded(seed)),
        Some(column) => {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, rows) in rows_by_label(t, column)?.into_values().enumerate() {
                let (a, b) = split_indices(rows, ratio, &mut stream(seed, i as u64));
                train.extend(a);
                test.extend(b);
            }
            (train, test)
        }
    };
    if train_rows.is_empty() {
        return Err(PartitionError::EmptyPartition("train"));
    }
    if test_rows.is_empty() {
        return Err(PartitionError::EmptyPartition("test"));
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitResult {
        train: t.take_rows(&train_rows)?,
        test: t.take_rows(&test_rows)?,
        train_rows,
        test_rows,
        seed,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RebalanceMode {
    Undersample,
    Oversample,
    Both,
}

impl FromStr for RebalanceMode {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "undersample" => Ok(RebalanceMode::Undersample),
            "oversample" => Ok(RebalanceMode::Oversample),
            "both" => Ok(RebalanceMode::Both),
            other => Err(PartitionError::Mode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RebalanceConfig {
    pub mode: RebalanceMode,
    /// Minority:majority size ratio after resampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for RebalanceConfig {
    fn default() -> Self {
        RebalanceConfig {
            mode: RebalanceMode::Undersample,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

/// Class sizes `(minority, majority)` after rebalancing `m` minority and
/// `big` majority rows. Sizes never shrink the minority nor grow the
/// majority.
pub fn rebalanced_sizes(mode: RebalanceMode, m: usize, big: usize, ratio: f64) -> (usize, usize) {
    let (mf, bf) = (m as f64, big as f64);
    let (minority, majority) = match mode {
        RebalanceMode::Undersample => (mf, mf / ratio),
        RebalanceMode::Oversample => (ratio * bf, bf),
        // geometric meeting point: minority' * majority' = m * big
        RebalanceMode::Both => ((ratio * bf * mf).sqrt(), (bf * mf / ratio).sqrt()),
    };
    let minority = (minority.round() as usize).max(m);
    let majority = (majority.round() as usize).min(big);
    (minority, majority)
}

/// Resamples a binary-target table toward `cfg.target_ratio`. Undersampling
/// draws majority rows without replacement; oversampling keeps every
/// minority row and adds copies drawn with replacement. Output rows are in
/// source order.
pub fn rebalance(
    t: &ColumnTable,
    target: &str,
    cfg: &RebalanceConfig,
) -> Result<ColumnTable, PartitionError> {
    if !(cfg.target_ratio > 0.0 && cfg.target_ratio <= 1.0) {
        return Err(PartitionError::TargetRatio(cfg.target_ratio));
    }
    let groups = rows_by_label(t, target)?;
    if groups.len() != 2 {
        return Err(PartitionError::NotBinary {
            column: target.to_string(),
            levels: groups.into_keys().collect(),
        });
    }
    let mut classes: Vec<Vec<usize>> = groups.into_values().collect();
    // stable: on equal sizes the first label counts as the minority
    classes.sort_by_key(Vec::len);
    let minority = &classes[0];
    let majority = &classes[1];
    let (n_min, n_maj) =
        rebalanced_sizes(cfg.mode, minority.len(), majority.len(), cfg.target_ratio);

    let mut rows: Vec<usize> = Vec::with_capacity(n_min + n_maj);
    let mut maj_rng = stream(cfg.seed, 0);
    rows.extend(
        sample_without_replacement(majority.len(), n_maj, &mut maj_rng)
            .into_iter()
            .map(|i| majority[i]),
    );
    rows.extend(minority);
    let mut min_rng = stream(cfg.seed, 1);
    rows.extend(
        sample_with_replacement(minority.len(), n_min - minority.len(), &mut min_rng)
            .into_iter()
            .map(|i| minority[i]),
    );
    rows.sort_unstable();
    Ok(t.take_rows(&rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn labelled(n_a: usize, n_b: usize) -> ColumnTable {
        let labels: Vec<Option<String>> = (0..n_a + n_b)
            .map(|i| Some(if i < n_a { "less severe" } else { "severe" }.to_string()))
            .collect();
        let ids = (0..n_a + n_b).map(|i| Some(i as f64)).collect();
        ColumnTable::new(vec![
            Column::numeric("id", ids),
            Column::categorical("y", labels),
        ])
        .unwrap()
    }

    fn ids(t: &ColumnTable) -> Vec<usize> {
        t.column("id")
            .unwrap()
            .as_numeric()
            .unwrap()
            .iter()
            .map(|v| v.unwrap() as usize)
            .collect()
    }

    #[test]
    fn nine_rows_two_thirds() {
        let t = labelled(5, 4);
        let s = train_test_split(&t, 2.0 / 3.0, 11, None).unwrap();
        assert_eq!((s.train.row_count(), s.test.row_count()), (6, 3));
        let mut all = [s.train_rows.clone(), s.test_rows.clone()].concat();
        all.sort_unstable();
        assert_eq!(all, (0..9).collect::<Vec<_>>());
        assert_eq!(s, train_test_split(&t, 2.0 / 3.0, 11, None).unwrap());
    }

    #[test]
    fn stratified_counts() {
        let t = labelled(900, 100);
        let s = train_test_split(&t, 2.0 / 3.0, 5, Some("y")).unwrap();
        let g = rows_by_label(&s.train, "y").unwrap();
        assert_eq!(g["less severe"].len(), 600);
        assert_eq!(g["severe"].len(), 67);
    }

    #[test]
    fn split_errors() {
        let t = labelled(1, 1);
        assert!(matches!(
            train_test_split(&t, 0.5, 1, None),
            Err(PartitionError::TooFewRows(2))
        ));
        assert!(matches!(
            train_test_split(&labelled(3, 3), 1.0, 1, None),
            Err(PartitionError::Ratio(_))
        ));
        assert!(matches!(
            train_test_split(&labelled(3, 0), 0.1, 1, None),
            Err(PartitionError::EmptyPartition("train"))
        ));
    }

    #[test]
    fn undersample_keeps_minority() {
        let t = labelled(90, 10);
        let cfg = RebalanceConfig::default();
        let out = rebalance(&t, "y", &cfg).unwrap();
        let g = rows_by_label(&out, "y").unwrap();
        assert_eq!(g["severe"].len(), 10);
        assert_eq!(g["less severe"].len(), 10);
        let got = ids(&out);
        assert_eq!(got.iter().filter(|&&i| i >= 90).count(), 10);
        assert!((90..100).all(|i| got.contains(&i)));
    }

    #[test]
    fn oversample_and_both() {
        let t = labelled(90, 10);
        let cfg = RebalanceConfig {
            mode: RebalanceMode::Oversample,
            ..RebalanceConfig::default()
        };
        let out = rebalance(&t, "y", &cfg).unwrap();
        let got = ids(&out);
        assert_eq!(got.len(), 180);
        assert_eq!(got.iter().filter(|&&i| i >= 90).count(), 90);
        let cfg = RebalanceConfig {
            mode: RebalanceMode::Both,
            ..RebalanceConfig::default()
        };
        let g = rows_by_label(&rebalance(&t, "y", &cfg).unwrap(), "y").unwrap();
        assert_eq!((g["less severe"].len(), g["severe"].len()), (30, 30));
    }

    #[test]
    fn single_class_errors() {
        let t = labelled(5, 0);
        assert!(matches!(
            rebalance(&t, "y", &RebalanceConfig::default()),
            Err(PartitionError::NotBinary { .. })
        ));
    }
}
