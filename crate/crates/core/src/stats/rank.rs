use super::dist::two_sided_normal;
use super::{StatsError, TestResult};

/// Largest pooled size for which the exact null distribution is used.
pub const EXACT_RANK_SUM_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSumMethod {
    /// Exact when `n_x + n_y <= 12` and there are no ties, else normal.
    Auto,
    Exact,
    Normal,
}

/// Mid-ranks (1-based) of `values` plus the sizes of tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share the average of ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

struct RankSum {
    w: f64,
    mean: f64,
    var: f64,
    ties: Vec<usize>,
    nx: usize,
    ny: usize,
}

fn rank_sum(x: &[f64], y: &[f64]) -> Result<RankSum, StatsError> {
    if x.is_empty() {
        return Err(StatsError::EmptySample("x"));
    }
    if y.is_empty() {
        return Err(StatsError::EmptySample("y"));
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let w: f64 = ranks[..x.len()].iter().sum();
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n = nx + ny;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = if n > 1.0 {
        nx * ny / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    Ok(RankSum {
        w,
        mean: nx * (n + 1.0) / 2.0,
        var,
        ties,
        nx: x.len(),
        ny: y.len(),
    })
}

/// Normal-approximation z score of the rank sum of `x`, with or without
/// the 0.5 continuity correction. Zero when the variance vanishes.
pub fn rank_sum_normal_z(x: &[f64], y: &[f64], continuity: bool) -> Result<f64, StatsError> {
    let rs = rank_sum(x, y)?;
    Ok(normal_z(&rs, continuity))
}

fn normal_z(rs: &RankSum, continuity: bool) -> f64 {
    if rs.var <= 0.0 {
        return 0.0;
    }
    let d = rs.w - rs.mean;
    let cc = if continuity { 0.5 * d.signum() } else { 0.0 };
    let d = if d == 0.0 { 0.0 } else { d - cc };
    d / rs.var.sqrt()
}

/// Counts of rank-sum values `1..=total_max` over all size-`k` subsets of
/// `{1..n}` (tie-free case).
fn exact_rank_sum_counts(n: usize, k: usize) -> Vec<Vec<f64>> {
    let max_sum = n * (n + 1) / 2;
    // counts[j][s]: subsets of size j with sum s, built up element by element
    let mut counts = vec![vec![0.0f64; max_sum + 1]; k + 1];
    counts[0][0] = 1.0;
    for r in 1..=n {
        for j in (1..=k.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[j][s] += counts[j - 1][s - r];
            }
        }
    }
    counts
}

fn exact_p(rs: &RankSum) -> f64 {
    let n = rs.nx + rs.ny;
    let counts = exact_rank_sum_counts(n, rs.nx);
    let dist = &counts[rs.nx];
    let total: f64 = dist.iter().sum();
    let w = rs.w.round() as usize;
    let lower: f64 = dist[..=w.min(dist.len() - 1)].iter().sum::<f64>() / total;
    let upper: f64 = dist[w.min(dist.len())..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Two-sided Wilcoxon rank-sum test; the statistic is the rank sum of `x`
/// in the pooled mid-ranking.
pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    wilcoxon_rank_sum_with(x, y, RankSumMethod::Auto)
}

pub fn wilcoxon_rank_sum_with(
    x: &[f64],
    y: &[f64],
    method: RankSumMethod,
) -> Result<TestResult, StatsError> {
    let rs = rank_sum(x, y)?;
    let n = rs.nx + rs.ny;
    let exact_ok = rs.ties.is_empty() && n <= EXACT_RANK_SUM_MAX_N;
    let use_exact = match method {
        RankSumMethod::Auto => exact_ok,
        RankSumMethod::Normal => false,
        RankSumMethod::Exact => {
            if !rs.ties.is_empty() {
                return Err(StatsError::ExactUnavailable("samples contain ties".into()));
            }
            if n > 60 {
                return Err(StatsError::ExactUnavailable(format!(
                    "pooled size {n} too large"
                )));
            }
            true
        }
    };
    if use_exact {
        return Ok(TestResult::new(
            "wilcoxon",
            rs.w,
            exact_p(&rs),
            None,
            "exact",
        ));
    }
    let z = normal_z(&rs, true);
    let detail = if rs.ties.is_empty() {
        format!("normal approximation, continuity corrected, z={z:.6}")
    } else {
        format!("normal approximation with tie correction, continuity corrected, z={z:.6}")
    };
    Ok(TestResult::new(
        "wilcoxon",
        rs.w,
        two_sided_normal(z),
        None,
        detail,
    ))
}
