mod common;

use accsev::rng::stream;
use accsev::stats::{
    chi_square_test, clopper_pearson, fisher_exact_2x2, welch_t_test, wilcoxon_rank_sum,
    wilcoxon_rank_sum_with, ContingencyTable, RankSumMethod,
};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{Beta, ContinuousCDF};

fn table(m: &[Vec<u64>]) -> ContingencyTable {
    ContingencyTable::new(m.to_vec()).unwrap()
}

/// Kolmogorov distance between the sample and Uniform(0, 1).
fn ks_uniform(mut p: Vec<f64>) -> f64 {
    p.sort_by(|a, b| a.total_cmp(b));
    let n = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max)
}

fn null_p_values(sims: usize, test: impl Fn(&[f64], &[f64]) -> f64) -> Vec<f64> {
    (0..sims)
        .map(|i| {
            let mut rng = stream(2024, i as u64);
            let mut draw = |n: usize| -> Vec<f64> {
                (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
            };
            let x = draw(25);
            let y = draw(30);
            test(&x, &y)
        })
        .collect()
}

#[test]
fn welch_null_p_values_are_uniform() {
    let p = null_p_values(10_000, |x, y| welch_t_test(x, y).unwrap().p_value);
    let d = ks_uniform(p);
    assert!(d < 0.05, "Kolmogorov distance {d}");
}

#[test]
fn wilcoxon_null_p_values_are_uniform() {
    let p = null_p_values(10_000, |x, y| wilcoxon_rank_sum(x, y).unwrap().p_value);
    let d = ks_uniform(p);
    assert!(d < 0.05, "Kolmogorov distance {d}");
}

#[test]
fn fisher_and_yates_null_p_values_stay_in_unit_interval() {
    let mut rng = stream(5, 0);
    for _ in 0..2_000 {
        let m: Vec<Vec<u64>> = (0..2)
            .map(|_| (0..2).map(|_| rng.random_range(1..30)).collect())
            .collect();
        let ct = table(&m);
        for p in [
            fisher_exact_2x2(&ct).unwrap().p_value,
            chi_square_test(&ct).unwrap().p_value,
        ] {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn clopper_pearson_matches_beta_quantiles() {
    for n in [1u64, 5, 17, 40, 120] {
        for k in 0..=n {
            let ci = clopper_pearson(k, n, 0.95).unwrap();
            let lower = if k == 0 {
                0.0
            } else {
                Beta::new(k as f64, (n - k + 1) as f64)
                    .unwrap()
                    .inverse_cdf(0.025)
            };
            let upper = if k == n {
                1.0
            } else {
                Beta::new((k + 1) as f64, (n - k) as f64)
                    .unwrap()
                    .inverse_cdf(0.975)
            };
            assert!((ci.lower - lower).abs() < 1e-7, "n={n} k={k}");
            assert!((ci.upper - upper).abs() < 1e-7, "n={n} k={k}");
        }
    }
}

fn distinct_sample(min: usize, max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (min..=max / 2, min..=max / 2).prop_flat_map(|(nx, ny)| {
        Just((0..(nx + ny) as u32).collect::<Vec<_>>())
            .prop_shuffle()
            .prop_map(move |v| {
                let vals: Vec<f64> = v.into_iter().map(|i| f64::from(i) * 1.5 - 3.0).collect();
                (vals[..nx].to_vec(), vals[nx..].to_vec())
            })
    })
}

fn tied_sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0u8..8, 1..25),
        prop::collection::vec(0u8..8, 1..25),
    )
        .prop_map(|(x, y)| {
            (
                x.into_iter().map(f64::from).collect(),
                y.into_iter().map(f64::from).collect(),
            )
        })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<u64>>> {
    prop::collection::vec(prop::collection::vec(1u64..40, cols), rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wilcoxon_ignores_increasing_transforms((x, y) in tied_sample()) {
        let f = |v: &[f64]| -> Vec<f64> { v.iter().map(|t| (t / 3.0).exp() * 7.0 + 2.0).collect() };
        let a = wilcoxon_rank_sum(&x, &y).unwrap();
        let b = wilcoxon_rank_sum(&f(&x), &f(&y)).unwrap();
        prop_assert_eq!(a.statistic, b.statistic);
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }

    #[test]
    fn wilcoxon_exact_matches_enumeration((x, y) in distinct_sample(1, 10)) {
        let r = wilcoxon_rank_sum_with(&x, &y, RankSumMethod::Exact).unwrap();
        prop_assert!((r.p_value - common::wilcoxon_enumerated(&x, &y)).abs() < 1e-12);
    }

    // A group of one or two observations leaves the normal curve up to 0.13
    // away from the exact p, so both groups hold at least three.
    #[test]
    fn wilcoxon_exact_and_normal_agree((x, y) in distinct_sample(3, 12)) {
        let e = wilcoxon_rank_sum_with(&x, &y, RankSumMethod::Exact).unwrap().p_value;
        let a = wilcoxon_rank_sum_with(&x, &y, RankSumMethod::Normal).unwrap().p_value;
        prop_assert!((e - a).abs() <= 0.05, "exact {} normal {}", e, a);
    }

    #[test]
    fn chi_square_ignores_row_and_column_order(
        m in (2usize..5, 2usize..5).prop_flat_map(|(r, c)| matrix(r, c)),
        seed in any::<u64>(),
    ) {
        let base = chi_square_test(&table(&m)).unwrap();
        let mut rng = stream(seed, 0);
        let mut rows = m.clone();
        accsev::rng::shuffle(&mut rows, &mut rng);
        let mut cols: Vec<usize> = (0..m[0].len()).collect();
        accsev::rng::shuffle(&mut cols, &mut rng);
        let permuted: Vec<Vec<u64>> = rows
            .iter()
            .map(|r| cols.iter().map(|&j| r[j]).collect())
            .collect();
        let other = chi_square_test(&table(&permuted)).unwrap();
        prop_assert!((base.statistic - other.statistic).abs() <= 1e-9 * base.statistic.max(1.0));
        prop_assert!((base.p_value - other.p_value).abs() <= 1e-9);
    }

    #[test]
    fn yates_matches_closed_form(m in matrix(2, 2)) {
        let r = chi_square_test(&table(&m)).unwrap();
        let closed = common::yates_closed(m[0][0], m[0][1], m[1][0], m[1][1]);
        prop_assert!((r.statistic - closed).abs() < 1e-9);
    }

    #[test]
    fn fisher_is_transpose_invariant(a in 0u64..15, b in 0u64..15, c in 0u64..15, d in 0u64..15) {
        prop_assume!(a + b > 0 && c + d > 0 && a + c > 0 && b + d > 0);
        let ct = table(&[vec![a, b], vec![c, d]]);
        let p = fisher_exact_2x2(&ct).unwrap().p_value;
        let q = fisher_exact_2x2(&ct.transpose()).unwrap().p_value;
        prop_assert!((p - q).abs() < 1e-12);
        prop_assert!((p - common::fisher_enumerated(a, b, c, d)).abs() < 1e-9);
    }

    #[test]
    fn welch_p_in_unit_interval(
        x in prop::collection::vec(-50.0f64..50.0, 2..30),
        y in prop::collection::vec(-50.0f64..50.0, 2..30),
    ) {
        if let Ok(r) = welch_t_test(&x, &y) {
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }
}
