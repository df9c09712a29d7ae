//! Reference implementations used as test oracles. Each one is written the
//! slow, obvious way and shares no code with the library.
#![allow(dead_code)]

use accsev::forest::{FeatureKind, Matrix};

/// `C(n, k)` in exact integer arithmetic.
pub fn choose(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Two-sided Fisher p by enumerating every table with the observed margins
/// and summing the ones no more probable than the observed table.
pub fn fisher_enumerated(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let weight = |k: u64| choose(r1, k) * choose(r2, c1 - k);
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let observed = weight(a);
    let mut total = 0u128;
    let mut extreme = 0u128;
    for k in lo..=hi {
        let w = weight(k);
        total += w;
        if w <= observed {
            extreme += w;
        }
    }
    extreme as f64 / total as f64
}

/// Yates-corrected chi-square of a 2x2 table from the closed form
/// `N (|ad - bc| - N/2)^2 / (r1 r2 c1 c2)`, floored at zero.
pub fn yates_closed(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let n = a + b + c + d;
    let diff = ((a * d - b * c).abs() - n / 2.0).max(0.0);
    n * diff * diff / ((a + b) * (c + d) * (a + c) * (b + d))
}

/// Exact two-sided rank-sum p for tie-free samples: walks every way of
/// choosing which pooled ranks belong to `x`.
pub fn wilcoxon_enumerated(x: &[f64], y: &[f64]) -> f64 {
    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let n = pooled.len();
    let w_obs: usize = pooled
        .iter()
        .enumerate()
        .filter(|(_, p)| p.1)
        .map(|(i, _)| i + 1)
        .sum();
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != x.len() {
            continue;
        }
        let w: usize = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).sum();
        total += 1;
        if w <= w_obs {
            le += 1;
        }
        if w >= w_obs {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

/// `(#(s+ > s-) + #(s+ = s-) / 2) / (n+ n-)` over all pairs.
pub fn mann_whitney_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut twice = 0u64;
    for &p in pos {
        for &q in neg {
            twice += if p > q {
                2
            } else if p == q {
                1
            } else {
                0
            };
        }
    }
    twice as f64 / (2 * pos.len() * neg.len()) as f64
}

/// Exact fraction with a positive denominator.
#[derive(Debug, Clone, Copy)]
pub struct Frac(pub i128, pub i128);

impl Frac {
    fn add(self, o: Frac) -> Frac {
        Frac(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn sub(self, o: Frac) -> Frac {
        Frac(self.0 * o.1 - o.0 * self.1, self.1 * o.1)
    }
    pub fn gt(self, o: Frac) -> bool {
        self.0 * o.1 > o.0 * self.1
    }
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

/// `n * Gini` of a node as an exact fraction: `n - sum c^2 / n`.
fn weighted_gini(c0: i128, c1: i128) -> Frac {
    let n = c0 + c1;
    if n == 0 {
        return Frac(0, 1);
    }
    Frac(n * n - c0 * c0 - c1 * c1, n)
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub decrease: Frac,
}

/// Tries every feature and every midpoint between consecutive distinct
/// values; keeps the first strictly best positive decrease.
pub fn brute_force_split(x: &Matrix, labels: &[u8]) -> Option<OracleSplit> {
    let n = x.n_rows();
    let count = |rows: &mut dyn Iterator<Item = usize>| {
        let mut c = [0i128; 2];
        for r in rows {
            c[labels[r] as usize] += 1;
        }
        c
    };
    let all = count(&mut (0..n));
    let parent = weighted_gini(all[0], all[1]);
    let mut best: Option<OracleSplit> = None;
    for f in 0..x.n_features() {
        let mut values: Vec<f64> = (0..n).map(|r| x.value(r, f)).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let threshold = match x.kind(f) {
                FeatureKind::Boolean => 0.5,
                FeatureKind::Numeric => (w[0] + w[1]) / 2.0,
            };
            let l = count(&mut (0..n).filter(|&r| x.value(r, f) <= threshold));
            let r = [all[0] - l[0], all[1] - l[1]];
            let dec = parent.sub(weighted_gini(l[0], l[1]).add(weighted_gini(r[0], r[1])));
            if !dec.gt(Frac(0, 1)) {
                continue;
            }
            if best.as_ref().is_none_or(|b| dec.gt(b.decrease)) {
                best = Some(OracleSplit {
                    feature: f,
                    threshold,
                    decrease: dec,
                });
            }
        }
    }
    best
}
