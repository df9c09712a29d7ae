//! Binary classification metrics: confusion-matrix statistics, ROC curves,
//! AUC and its cross-validated estimate, and side-by-side model comparison.

mod compare;
mod roc;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::stats::{binomial_tail_test, clopper_pearson, tail, Distribution, Interval, StatsError};

pub use compare::{compare_models, Comparison, ComparisonRow};
pub use roc::{
    auc, cv_auc, fold_mean_estimate, roc_curve, stratified_folds, AucEstimate, RocCurve, RocPoint,
    CV_METHOD,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("length mismatch: {0} actual vs {1} predicted")]
    LengthMismatch(usize, usize),
    #[error("labels must be binary, found {0:?}")]
    NonBinary(Vec<String>),
    #[error("positive label {0:?} does not occur")]
    UnknownPositive(String),
    #[error("empty confusion matrix")]
    Empty,
    #[error("need both classes, found only {0:?}")]
    SingleClass(String),
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("confidence {0} outside (0, 1)")]
    Confidence(f64),
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
    #[error("class (positive: {positive}) has {count} rows, fewer than {k} folds")]
    SmallClass {
        positive: bool,
        count: usize,
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub positive: String,
    /// `None` when only the positive label occurs.
    pub negative: Option<String>,
}

impl ConfusionMatrix {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix {
            tp,
            fp,
            fn_,
            tn,
            positive: "positive".into(),
            negative: Some("negative".into()),
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// The same predictions scored with the other label as positive.
    pub fn swapped(&self) -> Option<ConfusionMatrix> {
        Some(ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
            positive: self.negative.clone()?,
            negative: Some(self.positive.clone()),
        })
    }
}

/// Counts predictions against actual labels with `positive` as the positive
/// class.
pub fn confusion<S: AsRef<str>>(
    actual: &[S],
    predicted: &[S],
    positive: &str,
) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(actual.len(), predicted.len()));
    }
    let labels: BTreeSet<&str> = actual.iter().chain(predicted).map(AsRef::as_ref).collect();
    if labels.len() > 2 {
        return Err(EvalError::NonBinary(
            labels.iter().map(|s| s.to_string()).collect(),
        ));
    }
    if labels.len() == 2 && !labels.contains(positive) {
        return Err(EvalError::UnknownPositive(positive.to_string()));
    }
    let negative = labels
        .iter()
        .find(|l| **l != positive)
        .map(|s| s.to_string());
    let mut cm = ConfusionMatrix {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
        positive: positive.to_string(),
        negative,
    };
    for (a, p) in actual.iter().zip(predicted) {
        match (a.as_ref() == positive, p.as_ref() == positive) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub confidence: f64,
    pub accuracy: f64,
    pub accuracy_ci: Interval,
    pub nir: f64,
    pub p_acc_gt_nir: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub f1: Option<f64>,
    pub prevalence: f64,
    pub kappa: Option<f64>,
    pub mcnemar_statistic: Option<f64>,
    pub mcnemar_p: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Every statistic of the evaluation table. Ratios with a zero denominator
/// are `None`, never 0.
pub fn metrics(cm: &ConfusionMatrix, confidence: f64) -> Result<MetricsReport, EvalError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EvalError::Confidence(confidence));
    }
    let n = cm.total();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let nf = n as f64;
    let (tp, fp, fn_, tn) = (cm.tp, cm.fp, cm.fn_, cm.tn);
    let correct = tp + tn;
    let accuracy = correct as f64 / nf;
    let prevalence = (tp + fn_) as f64 / nf;
    let nir = prevalence.max(1.0 - prevalence);
    let sensitivity = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let ppv = ratio(tp, tp + fp);
    let npv = ratio(tn, tn + fn_);
    let f1 = match (ppv, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    let p_e =
        ((tp + fp) as f64 * (tp + fn_) as f64 + (fn_ + tn) as f64 * (fp + tn) as f64) / (nf * nf);
    let kappa = (p_e < 1.0).then(|| (accuracy - p_e) / (1.0 - p_e));
    let (mcnemar_statistic, mcnemar_p) = if fp + fn_ > 0 {
        let d = (fp as f64 - fn_ as f64).abs() - 1.0;
        let stat = d.max(0.0).powi(2) / (fp + fn_) as f64;
        (Some(stat), Some(tail(Distribution::ChiSquare(1.0), stat)?))
    } else {
        (None, None)
    };
    Ok(MetricsReport {
        confusion: cm.clone(),
        confidence,
        accuracy,
        accuracy_ci: clopper_pearson(correct, n, confidence)?,
        nir,
        p_acc_gt_nir: binomial_tail_test(correct, n, nir)?.p_value,
        sensitivity,
        specificity,
        ppv,
        npv,
        f1,
        prevalence,
        kappa,
        mcnemar_statistic,
        mcnemar_p,
    })
}

/// Three decimals, or `NA` for an undefined value.
pub fn fmt3(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"))
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        None => "NA".into(),
        Some(p) if p < 2e-16 => "<2e-16".into(),
        Some(p) if p < 1e-3 => format!("{p:.2e}"),
        Some(p) => format!("{p:.3}"),
    }
}

impl MetricsReport {
    /// Row layout of the reference statistics table, preceded by the matrix.
    pub fn to_text(&self) -> String {
        let cm = &self.confusion;
        let neg = cm.negative.as_deref().unwrap_or("other");
        let mut out = String::from("CONFUSION MATRIX AND STATISTICS\n");
        let _ = writeln!(out, "Prediction\\Reference\t{}\t{neg}", cm.positive);
        let _ = writeln!(out, "{}\t{}\t{}", cm.positive, cm.tp, cm.fp);
        let _ = writeln!(out, "{neg}\t{}\t{}", cm.fn_, cm.tn);
        let pct = (self.confidence * 100.0).round();
        let rows: [(String, String); 12] = [
            ("ACCURACY".into(), fmt3(Some(self.accuracy))),
            (
                format!("{pct}%CI"),
                format!(
                    "({:.3},{:.3})",
                    self.accuracy_ci.lower, self.accuracy_ci.upper
                ),
            ),
            ("SENSITIVITY/RECALL".into(), fmt3(self.sensitivity)),
            ("SPECIFICITY".into(), fmt3(self.specificity)),
            ("POS PRED VALUE/PRECISION".into(), fmt3(self.ppv)),
            ("F1 SCORE".into(), fmt3(self.f1)),
            ("NO INFORMATION RATE".into(), fmt3(Some(self.nir))),
            ("P-VALUE [ACC > NIR]".into(), fmt_p(Some(self.p_acc_gt_nir))),
            ("KAPPA".into(), fmt3(self.kappa)),
            ("MCNEMAR'S TEST P-VALUE".into(), fmt_p(self.mcnemar_p)),
            ("PREVALENCE".into(), fmt3(Some(self.prevalence))),
            ("NEG PRED VALUE".into(), fmt3(self.npv)),
        ];
        for (k, v) in rows {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_counts_and_swap() {
        let cm = confusion(&["+", "-"], &["+", "-"], "+").unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (1, 1, 0, 0));
        let cm = confusion(&["+", "+"], &["-", "-"], "+").unwrap();
        assert_eq!(cm.fn_, 2);
        let other = confusion(&["+", "+"], &["-", "-"], "-").unwrap();
        assert_eq!(cm.swapped().unwrap(), other);
        assert!(matches!(
            confusion(&["a", "b"], &["c", "a"], "a"),
            Err(EvalError::NonBinary(_))
        ));
        assert!(matches!(
            confusion(&["a"], &["a", "b"], "a"),
            Err(EvalError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn reference_matrix() {
        let cm = ConfusionMatrix::from_counts(644, 19, 169, 168);
        let m = metrics(&cm, 0.95).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 0.0005;
        assert!(close(m.accuracy, 0.812));
        assert!(close(m.sensitivity.unwrap(), 0.792));
        assert!(close(m.specificity.unwrap(), 0.898));
        assert!(close(m.ppv.unwrap(), 0.971));
        assert!(close(m.npv.unwrap(), 0.499));
        assert!(close(m.f1.unwrap(), 0.873));
        assert!(close(m.prevalence, 0.813));
        assert!(close(m.nir, 0.813));
        assert!(close(m.kappa.unwrap(), 0.528));
        assert!((m.mcnemar_statistic.unwrap() - 118.09042553191489).abs() < 1e-9);
        // reference values from an independent statistics library
        assert!((m.mcnemar_p.unwrap() / 1.6566080756703275e-27 - 1.0).abs() < 1e-6);
        assert!((m.accuracy_ci.lower - 0.786378459836871).abs() < 1e-9);
        assert!((m.accuracy_ci.upper - 0.8357692765986812).abs() < 1e-9);
        assert!((m.p_acc_gt_nir - 0.5517081272125998).abs() < 1e-9);
        assert!(m.to_text().contains("MCNEMAR'S TEST P-VALUE\t<2e-16"));
    }

    #[test]
    fn perfect_and_chance() {
        let m = metrics(&ConfusionMatrix::from_counts(50, 0, 0, 50), 0.95).unwrap();
        assert_eq!((m.accuracy, m.kappa, m.f1), (1.0, Some(1.0), Some(1.0)));
        assert_eq!(m.mcnemar_p, None);
        let m = metrics(&ConfusionMatrix::from_counts(25, 25, 25, 25), 0.95).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.kappa, Some(0.0));
    }

    #[test]
    fn undefined_ratios_are_none() {
        let m = metrics(&ConfusionMatrix::from_counts(0, 0, 0, 10), 0.95).unwrap();
        assert_eq!(m.sensitivity, None);
        assert_eq!(m.ppv, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.kappa, None);
        assert!(m.to_text().contains("SENSITIVITY/RECALL\tNA"));
        assert!(m.to_json().contains("\"sensitivity\": null"));
        assert!(matches!(
            metrics(&ConfusionMatrix::from_counts(0, 0, 0, 0), 0.95),
            Err(EvalError::Empty)
        ));
    }
}
