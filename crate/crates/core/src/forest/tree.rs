use std::cmp::Ordering;

use rand::Rng;
use serde::Serialize;

use super::encode::{FeatureKind, Matrix};
use super::ForestError;
use crate::rng::sample_without_replacement;

/// `1 - sum (n_i / n)^2`.
pub fn gini_impurity(counts: &[u64]) -> Result<f64, ForestError> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(ForestError::EmptyNode);
    }
    let n = n as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

fn gini(counts: [u64; 2]) -> f64 {
    gini_impurity(&counts).unwrap_or(0.0)
}

/// Weighted impurity decrease `n G(node) - n_L G(L) - n_R G(R)`.
pub fn impurity_decrease(left: [u64; 2], right: [u64; 2]) -> f64 {
    let parent = [left[0] + right[0], left[1] + right[1]];
    let n = |c: [u64; 2]| (c[0] + c[1]) as f64;
    n(parent) * gini(parent) - n(left) * gini(left) - n(right) * gini(right)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitRule {
    pub feature: usize,
    pub kind: FeatureKind,
    /// Rows with `x <= threshold` go left. Boolean splits use 0.5
    /// (false left).
    pub threshold: f64,
}

impl SplitRule {
    pub fn goes_left(&self, x: f64) -> bool {
        x <= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Split {
    pub rule: SplitRule,
    pub decrease: f64,
    pub left: [u64; 2],
    pub right: [u64; 2],
}

/// `sum c_i^2 / n` of a child as an exact fraction `(num, den)`.
fn child_score(c: [u64; 2]) -> (u128, u128) {
    let sq = |x: u64| u128::from(x) * u128::from(x);
    (sq(c[0]) + sq(c[1]), u128::from(c[0] + c[1]))
}

/// Score `sum_L c^2 / n_L + sum_R c^2 / n_R` as an exact fraction. Larger
/// score means a larger impurity decrease.
fn split_score(l: [u64; 2], r: [u64; 2]) -> (u128, u128) {
    let (a, b) = child_score(l);
    let (c, d) = child_score(r);
    (a * d + c * b, b * d)
}

fn cmp_fraction(x: (u128, u128), y: (u128, u128)) -> Ordering {
    (x.0 * y.1).cmp(&(y.0 * x.1))
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a / 2.0 + b / 2.0;
    if a < m && m < b {
        m
    } else {
        a
    }
}

/// Best Gini split of `rows` over `candidates`, or `None` when no
/// admissible split (both children at least `min_leaf`) strictly lowers
/// impurity. Ties go to the lower feature index, then the lower threshold.
pub fn best_split(
    x: &Matrix,
    labels: &[u8],
    rows: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let min_leaf = min_leaf.max(1);
    let mut total = [0u64; 2];
    for &r in rows {
        total[labels[r] as usize] += 1;
    }
    let n = rows.len();
    if n < 2 * min_leaf || total[0] == 0 || total[1] == 0 {
        return None;
    }
    let parent = child_score(total);
    let mut order: Vec<usize> = candidates.to_vec();
    order.sort_unstable();
    order.dedup();

    let mut best: Option<(Split, (u128, u128))> = None;
    let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
    for f in order {
        let col = x.column(f);
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (col[r], labels[r])));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = [0u64; 2];
        for i in 0..n - 1 {
            left[pairs[i].1 as usize] += 1;
            let (v, next) = (pairs[i].0, pairs[i + 1].0);
            let n_left = i + 1;
            if v == next || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = split_score(left, right);
            if cmp_fraction(score, parent) != Ordering::Greater {
                continue;
            }
            if best
                .as_ref()
                .is_some_and(|(_, s)| cmp_fraction(score, *s) != Ordering::Greater)
            {
                continue;
            }
            let rule = SplitRule {
                feature: f,
                kind: x.kind(f),
                threshold: match x.kind(f) {
                    FeatureKind::Boolean => 0.5,
                    FeatureKind::Numeric => midpoint(v, next),
                },
            };
            let split = Split {
                rule,
                decrease: impurity_decrease(left, right),
                left,
                right,
            };
            best = Some((split, score));
        }
    }
    best.map(|(s, _)| s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Node {
    Split {
        rule: SplitRule,
        left: usize,
        right: usize,
        /// In-bag class counts reaching the node.
        counts: [u64; 2],
        decrease: f64,
    },
    Leaf {
        counts: [u64; 2],
    },
}

impl Node {
    pub fn counts(&self) -> [u64; 2] {
        match self {
            Node::Split { counts, .. } | Node::Leaf { counts } => *counts,
        }
    }

    pub fn impurity(&self) -> f64 {
        gini(self.counts())
    }
}

/// Majority class of a leaf; a tie goes to class 0 (the lower label).
pub fn leaf_class(counts: [u64; 2]) -> u8 {
    u8::from(counts[1] > counts[0])
}

/// A CART tree stored as a preorder arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_for(&self, x: &Matrix, row: usize) -> &Node {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    rule, left, right, ..
                } => {
                    i = if rule.goes_left(x.value(row, rule.feature)) {
                        *left
                    } else {
                        *right
                    };
                }
                leaf @ Node::Leaf { .. } => return leaf,
            }
        }
    }

    pub fn predict_class(&self, x: &Matrix, row: usize) -> u8 {
        leaf_class(self.leaf_for(x, row).counts())
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Leaves whose class counts are tied.
    pub fn tied_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { counts } if counts[0] == counts[1]))
            .count()
    }

    pub fn splits(&self) -> impl Iterator<Item = (&SplitRule, f64)> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { rule, decrease, .. } => Some((rule, *decrease)),
            Node::Leaf { .. } => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowParams {
    pub mtry: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

/// Grows a tree on `rows` (indices may repeat, as in a bootstrap sample).
/// Each node draws `mtry` candidate features without replacement from
/// `rng`.
pub fn grow_tree<R: Rng + ?Sized>(
    x: &Matrix,
    labels: &[u8],
    rows: Vec<usize>,
    params: &GrowParams,
    rng: &mut R,
) -> Tree {
    let p = x.n_features();
    let mtry = params.mtry.clamp(1, p.max(1));
    let mut nodes: Vec<Node> = Vec::new();
    // (rows, depth, parent link: (parent index, is_left))
    type Pending = (Vec<usize>, usize, Option<(usize, bool)>);
    let mut stack: Vec<Pending> = vec![(rows, 0, None)];
    while let Some((rows, depth, parent)) = stack.pop() {
        let id = nodes.len();
        if let Some((pi, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[pi] {
                if is_left {
                    *left = id;
                } else {
                    *right = id;
                }
            }
        }
        let mut counts = [0u64; 2];
        for &r in &rows {
            counts[labels[r] as usize] += 1;
        }
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        let split = if depth_ok && counts[0] > 0 && counts[1] > 0 && p > 0 {
            let candidates = sample_without_replacement(p, mtry, rng);
            best_split(x, labels, &rows, &candidates, params.min_leaf)
        } else {
            None
        };
        match split {
            None => nodes.push(Node::Leaf { counts }),
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&row| s.rule.goes_left(x.value(row, s.rule.feature)));
                nodes.push(Node::Split {
                    rule: s.rule,
                    left: usize::MAX,
                    right: usize::MAX,
                    counts,
                    decrease: s.decrease,
                });
                // left is popped first, so the arena stays in preorder
                stack.push((r, depth + 1, Some((id, false))));
                stack.push((l, depth + 1, Some((id, true))));
            }
        }
    }
    Tree { nodes }
}
