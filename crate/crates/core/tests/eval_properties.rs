mod common;

use accsev::eval::{auc, confusion, cv_auc, metrics, roc_curve, stratified_folds, ConfusionMatrix};
use proptest::prelude::*;

fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<&'static str>)> {
    // small score alphabet so ties are common
    prop::collection::vec((0u8..12, any::<bool>()), 2..50)
        .prop_filter("both classes", |v| {
            v.iter().any(|p| p.1) && v.iter().any(|p| !p.1)
        })
        .prop_map(|v| {
            let scores = v.iter().map(|p| f64::from(p.0) / 11.0).collect();
            let labels = v.iter().map(|p| if p.1 { "pos" } else { "neg" }).collect();
            (scores, labels)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn accuracy_decomposes(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
        prop_assume!(tp + fn_ > 0 && fp + tn > 0);
        let m = metrics(&ConfusionMatrix::from_counts(tp, fp, fn_, tn), 0.95).unwrap();
        let identity = m.prevalence * m.sensitivity.unwrap()
            + (1.0 - m.prevalence) * m.specificity.unwrap();
        prop_assert!((m.accuracy - identity).abs() < 1e-12);
        for r in [m.accuracy, m.sensitivity.unwrap(), m.specificity.unwrap(), m.prevalence, m.nir] {
            prop_assert!((0.0..=1.0).contains(&r));
        }
        prop_assert!(m.accuracy_ci.contains(m.accuracy));
        if let (Some(p), Some(r), Some(f1)) = (m.ppv, m.sensitivity, m.f1) {
            prop_assert!((f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
        }
        if let Some(k) = m.kappa {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k));
            prop_assert_eq!((k - 1.0).abs() < 1e-12, fp == 0 && fn_ == 0);
        }
    }

    #[test]
    fn swapping_positive_swaps_cells(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..60)) {
        let actual: Vec<&str> = pairs.iter().map(|p| if p.0 { "a" } else { "b" }).collect();
        let predicted: Vec<&str> = pairs.iter().map(|p| if p.1 { "a" } else { "b" }).collect();
        let a = confusion(&actual, &predicted, "a").unwrap();
        let b = confusion(&actual, &predicted, "b").unwrap();
        prop_assert_eq!((a.tp, a.fp, a.fn_, a.tn), (b.tn, b.fn_, b.fp, b.tp));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trapezoid_equals_pair_count((scores, labels) in scored()) {
        let pos: Vec<f64> = scores.iter().zip(&labels).filter(|p| *p.1 == "pos").map(|p| *p.0).collect();
        let neg: Vec<f64> = scores.iter().zip(&labels).filter(|p| *p.1 == "neg").map(|p| *p.0).collect();
        let a = auc(&scores, &labels, "pos").unwrap();
        prop_assert!((a - common::mann_whitney_auc(&pos, &neg)).abs() < 1e-12);
        let inverted = auc(&scores, &labels, "neg").unwrap();
        prop_assert!((a + inverted - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roc_is_monotone_from_origin_to_corner((scores, labels) in scored()) {
        let c = roc_curve(&scores, &labels, "pos").unwrap();
        let first = c.points.first().unwrap();
        let last = c.points.last().unwrap();
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in c.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            prop_assert!(w[1].threshold < w[0].threshold);
        }
    }
}

#[test]
fn cv_auc_over_stratified_folds() {
    let labels: Vec<&str> = (0..60)
        .map(|i| if i % 3 == 0 { "pos" } else { "neg" })
        .collect();
    let scores: Vec<f64> = (0..60)
        .map(|i| if labels[i] == "pos" { 0.6 } else { 0.4 } + (i % 7) as f64 * 0.05)
        .collect();
    let fold_of = stratified_folds(&labels, "pos", 5, 3).unwrap();
    let folds: Vec<(Vec<f64>, Vec<&str>)> = (0..5)
        .map(|k| {
            let rows: Vec<usize> = (0..60).filter(|&r| fold_of[r] == k).collect();
            (
                rows.iter().map(|&r| scores[r]).collect(),
                rows.iter().map(|&r| labels[r]).collect(),
            )
        })
        .collect();
    let est = cv_auc(&folds, "pos", 0.95).unwrap();
    let mean = est.fold_values.iter().sum::<f64>() / 5.0;
    assert!((est.value - mean).abs() < 1e-15);
    assert!(est.se > 0.0 && est.ci.contains(est.value));
    assert_eq!(est.folds, 5);
    assert!(cv_auc(&folds[..1], "pos", 0.95).is_err());
}
