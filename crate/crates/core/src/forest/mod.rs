//! CART trees and a Random Forest classifier for binary targets, with
//! Mean Decrease Gini importance.
//!
//! Tree `i` of a forest draws its bootstrap sample and per-node feature
//! candidates from the random stream `(seed, i)`, so a trained model does
//! not depend on how many worker threads grew it.

mod encode;
mod io;
mod tree;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{sample_with_replacement, stream};
use crate::table::{ColumnKind, ColumnTable, TableError};

pub use encode::{build_schema, encode, Encoding, FeatureKind, FeatureSpec, Matrix};
pub use io::{load_model, read_model, save_model, write_model, FORMAT_VERSION};
pub use tree::{
    best_split, gini_impurity, grow_tree, impurity_decrease, leaf_class, GrowParams, Node, Split,
    SplitRule, Tree,
};

#[derive(Debug, Error)]
pub enum ForestError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("gini impurity of an empty node")]
    EmptyNode,
    #[error("target {column:?} must have 2 classes, found {levels:?}")]
    TargetNotBinary { column: String, levels: Vec<String> },
    #[error("positive label {label:?} is not a class of {column:?}")]
    UnknownPositive { column: String, label: String },
    #[error("no feature columns to train on")]
    NoFeatures,
    #[error("column {column:?} has {count} missing cells")]
    MissingValues { column: String, count: usize },
    #[error("column {column:?} of kind {kind} cannot be a feature")]
    UnsupportedFeature { column: String, kind: ColumnKind },
    #[error("invalid forest config: {0}")]
    Config(String),
    #[error("feature matrix: {0}")]
    Shape(String),
    #[error("input does not match the model schema: {0}")]
    SchemaMismatch(String),
    #[error("unsupported model format {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },
    #[error("corrupt model file at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("model i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidates per node; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
    /// No bootstrap and every feature a candidate at every node.
    pub exact: bool,
    pub compute_oob: bool,
    /// Worker threads; `None` uses the global pool. Does not affect results.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            mtry: None,
            min_leaf: 1,
            max_depth: None,
            seed: 0,
            exact: false,
            compute_oob: false,
            threads: None,
        }
    }
}

impl ForestConfig {
    /// One fully grown CART tree on the full sample.
    pub fn single_tree(seed: u64) -> Self {
        ForestConfig {
            n_trees: 1,
            exact: true,
            seed,
            ..ForestConfig::default()
        }
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        if self.exact {
            p
        } else {
            self.mtry
                .unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1))
        }
    }

    pub fn validate(&self, p: usize) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::Config("n_trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(ForestError::Config("min_leaf must be >= 1".into()));
        }
        let m = self.resolved_mtry(p);
        if m == 0 || m > p {
            return Err(ForestError::Config(format!("mtry {m} outside 1..={p}")));
        }
        if self.threads == Some(0) {
            return Err(ForestError::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which columns to train on and which class counts as positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainOptions {
    /// `None` uses every non-target column.
    pub features: Option<Vec<String>>,
    /// `None` picks the second class in sorted order.
    pub positive: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub target: String,
    /// Both class labels, sorted.
    pub classes: [String; 2],
    /// Index into `classes`.
    pub positive: usize,
    pub features: Vec<FeatureSpec>,
    pub trees: Vec<Tree>,
    /// Mean Decrease Gini per feature.
    pub importance: Vec<f64>,
    pub oob_error: Option<f64>,
}

/// Sorted class labels of `target` and each row's class index.
pub fn class_labels(t: &ColumnTable, target: &str) -> Result<([String; 2], Vec<u8>), ForestError> {
    let col = t.require(target)?;
    let n = col.n_missing();
    if n > 0 {
        return Err(ForestError::MissingValues {
            column: target.to_string(),
            count: n,
        });
    }
    let rendered: Vec<String> = col
        .cells()
        .map(|c| c.render().unwrap_or_default())
        .collect();
    let levels: BTreeSet<&String> = rendered.iter().collect();
    if levels.len() != 2 {
        return Err(ForestError::TargetNotBinary {
            column: target.to_string(),
            levels: levels.into_iter().cloned().collect(),
        });
    }
    let mut it = levels.into_iter();
    let classes = [
        it.next().expect("two levels").clone(),
        it.next().expect("two levels").clone(),
    ];
    let y = rendered
        .iter()
        .map(|s| u8::from(*s == classes[1]))
        .collect();
    Ok((classes, y))
}

struct Grown {
    tree: Tree,
    in_bag: Option<Vec<bool>>,
}

fn grow_one(x: &Matrix, y: &[u8], cfg: &ForestConfig, params: &GrowParams, i: usize) -> Grown {
    let n = x.n_rows();
    let mut rng = stream(cfg.seed, i as u64);
    let rows = if cfg.exact {
        (0..n).collect()
    } else {
        sample_with_replacement(n, n, &mut rng)
    };
    let in_bag = cfg.compute_oob.then(|| {
        let mut mask = vec![false; n];
        for &r in &rows {
            mask[r] = true;
        }
        mask
    });
    Grown {
        tree: grow_tree(x, y, rows, params, &mut rng),
        in_bag,
    }
}

/// Trees, per-feature Mean Decrease Gini, and OOB error when requested.
pub type Trained = (Vec<Tree>, Vec<f64>, Option<f64>);

/// Trains on an already encoded matrix.
pub fn train_matrix(x: &Matrix, y: &[u8], cfg: &ForestConfig) -> Result<Trained, ForestError> {
    let p = x.n_features();
    if p == 0 {
        return Err(ForestError::NoFeatures);
    }
    if y.len() != x.n_rows() || x.n_rows() == 0 {
        return Err(ForestError::Shape(format!(
            "{} labels for {} rows",
            y.len(),
            x.n_rows()
        )));
    }
    cfg.validate(p)?;
    let params = GrowParams {
        mtry: cfg.resolved_mtry(p),
        min_leaf: cfg.min_leaf,
        max_depth: cfg.max_depth,
    };
    let run = || -> Vec<Grown> {
        (0..cfg.n_trees)
            .into_par_iter()
            .map(|i| grow_one(x, y, cfg, &params, i))
            .collect()
    };
    let grown = match cfg.threads {
        None => run(),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| ForestError::ThreadPool(e.to_string()))?
            .install(run),
    };

    let mut importance = vec![0.0; p];
    for g in &grown {
        for (rule, dec) in g.tree.splits() {
            importance[rule.feature] += dec;
        }
    }
    for v in &mut importance {
        *v /= cfg.n_trees as f64;
    }

    let oob_error = cfg.compute_oob.then(|| {
        let n = x.n_rows();
        let mut votes = vec![[0u32; 2]; n];
        for g in &grown {
            let mask = g.in_bag.as_ref().expect("mask kept when oob requested");
            for (r, v) in votes.iter_mut().enumerate() {
                if !mask[r] {
                    v[g.tree.predict_class(x, r) as usize] += 1;
                }
            }
        }
        let (mut wrong, mut seen) = (0usize, 0usize);
        for (v, &label) in votes.iter().zip(y) {
            if v[0] + v[1] > 0 {
                seen += 1;
                // ties count as class 1
                if u8::from(v[1] >= v[0]) != label {
                    wrong += 1;
                }
            }
        }
        if seen == 0 {
            f64::NAN
        } else {
            wrong as f64 / seen as f64
        }
    });
    let trees = grown.into_iter().map(|g| g.tree).collect();
    Ok((trees, importance, oob_error.filter(|e| !e.is_nan())))
}

pub fn train_forest(
    t: &ColumnTable,
    target: &str,
    cfg: &ForestConfig,
) -> Result<ForestModel, ForestError> {
    train_forest_with(t, target, &TrainOptions::default(), cfg)
}

pub fn train_forest_with(
    t: &ColumnTable,
    target: &str,
    opts: &TrainOptions,
    cfg: &ForestConfig,
) -> Result<ForestModel, ForestError> {
    let (classes, y) = class_labels(t, target)?;
    let positive =
        match &opts.positive {
            None => 1,
            Some(label) => classes.iter().position(|c| c == label).ok_or_else(|| {
                ForestError::UnknownPositive {
                    column: target.to_string(),
                    label: label.clone(),
                }
            })?,
        };
    let columns: Vec<String> = match &opts.features {
        Some(f) => f.clone(),
        None => t
            .names()
            .filter(|n| *n != target)
            .map(str::to_string)
            .collect(),
    };
    if columns.iter().any(|c| c == target) {
        return Err(ForestError::Config(format!(
            "target {target:?} listed as a feature"
        )));
    }
    let features = build_schema(t, &columns)?;
    let x = encode(t, &features)?;
    let (trees, importance, oob_error) = train_matrix(&x, &y, cfg)?;
    Ok(ForestModel {
        config: cfg.clone(),
        target: target.to_string(),
        classes,
        positive,
        features,
        trees,
        importance,
        oob_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceEntry {
    pub name: String,
    pub mdg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Importance {
    /// One entry per model feature, descending.
    pub features: Vec<ImportanceEntry>,
    /// Features summed per source column, descending.
    pub variables: Vec<ImportanceEntry>,
}

fn sorted_desc(mut v: Vec<ImportanceEntry>) -> Vec<ImportanceEntry> {
    // stable, so equal values keep feature order
    v.sort_by(|a, b| b.mdg.total_cmp(&a.mdg));
    v
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn positive_label(&self) -> &str {
        &self.classes[self.positive]
    }

    pub fn negative_label(&self) -> &str {
        &self.classes[1 - self.positive]
    }

    pub fn encode(&self, t: &ColumnTable) -> Result<Matrix, ForestError> {
        encode(t, &self.features)
    }

    /// Share of trees whose leaf majority is the positive class.
    pub fn predict_proba_matrix(&self, x: &Matrix) -> Result<Vec<f64>, ForestError> {
        if x.n_features() != self.features.len() {
            return Err(ForestError::SchemaMismatch(format!(
                "{} features, model has {}",
                x.n_features(),
                self.features.len()
            )));
        }
        let n_trees = self.trees.len() as f64;
        let pos = self.positive as u8;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|r| {
                let votes = self
                    .trees
                    .iter()
                    .filter(|t| t.predict_class(x, r) == pos)
                    .count();
                votes as f64 / n_trees
            })
            .collect())
    }

    pub fn predict_proba(&self, t: &ColumnTable) -> Result<Vec<f64>, ForestError> {
        self.predict_proba_matrix(&self.encode(t)?)
    }

    /// Positive label iff the score reaches `threshold`.
    pub fn predict(&self, t: &ColumnTable, threshold: f64) -> Result<Vec<String>, ForestError> {
        Ok(self
            .predict_proba(t)?
            .into_iter()
            .map(|s| self.label_for(s, threshold).to_string())
            .collect())
    }

    pub fn label_for(&self, score: f64, threshold: f64) -> &str {
        if score >= threshold {
            self.positive_label()
        } else {
            self.negative_label()
        }
    }

    /// Leaves with tied class counts across all trees (they vote for the
    /// lower label).
    pub fn tied_leaves(&self) -> usize {
        self.trees.iter().map(Tree::tied_leaves).sum()
    }
}

/// Mean Decrease Gini per feature and per source variable, descending.
pub fn importance_mdg(model: &ForestModel) -> Importance {
    let features = model
        .features
        .iter()
        .zip(&model.importance)
        .map(|(f, &mdg)| ImportanceEntry {
            name: f.name.clone(),
            mdg,
        })
        .collect();
    let mut variables: Vec<ImportanceEntry> = Vec::new();
    for (f, &mdg) in model.features.iter().zip(&model.importance) {
        match variables.iter_mut().find(|v| v.name == f.source) {
            Some(v) => v.mdg += mdg,
            None => variables.push(ImportanceEntry {
                name: f.source.clone(),
                mdg,
            }),
        }
    }
    Importance {
        features: sorted_desc(features),
        variables: sorted_desc(variables),
    }
}

impl Importance {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Variable\tMeanDecreaseGini\n");
        for e in &self.variables {
            out.push_str(&format!("{}\t{:.2}\n", e.name, e.mdg));
        }
        out
    }

    pub fn features_tsv(&self) -> String {
        let mut out = String::from("Feature\tMeanDecreaseGini\n");
        for e in &self.features {
            out.push_str(&format!("{}\t{}\n", e.name, e.mdg));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Column;

    fn toy() -> ColumnTable {
        ColumnTable::new(vec![
            Column::numeric("x", vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]),
            Column::from_strs("y", &[Some("a"), Some("a"), Some("b"), Some("b")]),
        ])
        .unwrap()
    }

    #[test]
    fn exact_stump_matches_oracle() {
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: Some(1),
            exact: true,
            ..ForestConfig::default()
        };
        let m = train_forest(&toy(), "y", &cfg).unwrap();
        let root = &m.trees[0].nodes[0];
        match root {
            Node::Split { rule, decrease, .. } => {
                assert_eq!(rule.threshold, 2.5);
                assert_eq!(*decrease, 2.0);
            }
            other => panic!("expected split, got {other:?}"),
        }
        let imp = importance_mdg(&m);
        assert_eq!(imp.features[0].mdg, 2.0);
        assert_eq!(m.predict_proba(&toy()).unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(m.positive_label(), "b");
    }

    #[test]
    fn predict_threshold_rules() {
        let m = train_forest(&toy(), "y", &ForestConfig::single_tree(0)).unwrap();
        assert_eq!(m.label_for(0.5, 0.5), "b");
        assert_eq!(m.predict(&toy(), 0.0).unwrap(), vec!["b"; 4]);
        assert_eq!(m.predict(&toy(), 1.0 + 1e-9).unwrap(), vec!["a"; 4]);
    }

    #[test]
    fn config_and_target_errors() {
        let t = toy();
        let bad = ForestConfig {
            n_trees: 0,
            ..ForestConfig::default()
        };
        assert!(matches!(
            train_forest(&t, "y", &bad),
            Err(ForestError::Config(_))
        ));
        let only_target = t.select_columns(&["y"]).unwrap();
        assert!(matches!(
            train_forest(&only_target, "y", &ForestConfig::default()),
            Err(ForestError::NoFeatures)
        ));
        assert!(matches!(
            train_forest(&t, "x", &ForestConfig::default()),
            Err(ForestError::TargetNotBinary { .. })
        ));
        let opts = TrainOptions {
            positive: Some("zzz".into()),
            ..TrainOptions::default()
        };
        assert!(matches!(
            train_forest_with(&t, "y", &opts, &ForestConfig::default()),
            Err(ForestError::UnknownPositive { .. })
        ));
    }

    #[test]
    fn vote_granularity() {
        let cfg = ForestConfig {
            n_trees: 7,
            seed: 3,
            ..ForestConfig::default()
        };
        let m = train_forest(&toy(), "y", &cfg).unwrap();
        for s in m.predict_proba(&toy()).unwrap() {
            let k = s * 7.0;
            assert!((k - k.round()).abs() < 1e-12);
        }
    }
}
