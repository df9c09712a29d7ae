use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use super::EvalError;
use crate::rng::{shuffle, stream};
use crate::stats::{normal_quantile, Interval};

pub const CV_METHOD: &str = "fold-mean normal approximation";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    /// Scores `>= threshold` are called positive. The first point uses +inf.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub tp: u64,
    pub fp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub positive: String,
    pub n_pos: u64,
    pub n_neg: u64,
    pub points: Vec<RocPoint>,
}

fn check_inputs<S: AsRef<str>>(
    scores: &[f64],
    actual: &[S],
    positive: &str,
) -> Result<Vec<bool>, EvalError> {
    if scores.len() != actual.len() {
        return Err(EvalError::LengthMismatch(actual.len(), scores.len()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let labels: BTreeSet<&str> = actual.iter().map(AsRef::as_ref).collect();
    if labels.len() > 2 {
        return Err(EvalError::NonBinary(
            labels.iter().map(|s| s.to_string()).collect(),
        ));
    }
    match labels.len() {
        0 => Err(EvalError::Empty),
        1 => Err(EvalError::SingleClass(labels.first().unwrap().to_string())),
        _ if !labels.contains(positive) => Err(EvalError::UnknownPositive(positive.to_string())),
        _ => Ok(actual.iter().map(|a| a.as_ref() == positive).collect()),
    }
}

/// ROC curve with one point per distinct score, highest first. Tied scores
/// move both rates in one step.
pub fn roc_curve<S: AsRef<str>>(
    scores: &[f64],
    actual: &[S],
    positive: &str,
) -> Result<RocCurve, EvalError> {
    let is_pos = check_inputs(scores, actual, positive)?;
    let n_pos = is_pos.iter().filter(|&&p| p).count() as u64;
    let n_neg = is_pos.len() as u64 - n_pos;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
        tp: 0,
        fp: 0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if is_pos[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            tp,
            fp,
        });
    }
    Ok(RocCurve {
        positive: positive.to_string(),
        n_pos,
        n_neg,
        points,
    })
}

impl RocCurve {
    /// Trapezoidal area, summed in integer counts so it equals the
    /// tie-corrected Mann–Whitney proportion.
    pub fn auc(&self) -> f64 {
        let twice: u128 = self
            .points
            .windows(2)
            .map(|w| u128::from(w[1].fp - w[0].fp) * u128::from(w[1].tp + w[0].tp))
            .sum();
        twice as f64 / (2 * u128::from(self.n_pos) * u128::from(self.n_neg)) as f64
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("threshold\tfpr\ttpr\n");
        for p in &self.points {
            let thr = if p.threshold.is_infinite() {
                "Inf".to_string()
            } else {
                format!("{}", p.threshold)
            };
            let _ = writeln!(out, "{thr}\t{:.6}\t{:.6}", p.fpr, p.tpr);
        }
        out
    }

    /// Standalone SVG plot of the curve against the chance diagonal.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 480.0;
        const PAD: f64 = 56.0;
        let span = SIZE - 2.0 * PAD;
        let x = |fpr: f64| PAD + fpr * span;
        let y = |tpr: f64| SIZE - PAD - tpr * span;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{PAD}" y="{PAD}" width="{span}" height="{span}" fill="none" stroke="black"/>"#
        );
        for k in 0..=5 {
            let v = f64::from(k) / 5.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#,
                x(v),
                SIZE - PAD + 18.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
                PAD - 6.0,
                y(v) + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
            x(0.0),
            y(0.0),
            x(1.0),
            y(1.0)
        );
        let pts: Vec<String> = self
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.tpr)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">False positive rate</text>"#,
            SIZE / 2.0,
            SIZE - 14.0
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">True positive rate</text>"#,
            SIZE / 2.0,
            SIZE / 2.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="30" text-anchor="middle" font-size="14">{}</text>"#,
            SIZE / 2.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">AUC = {:.3}</text>"#,
            SIZE - PAD - 8.0,
            SIZE - PAD - 10.0,
            self.auc()
        );
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn auc<S: AsRef<str>>(scores: &[f64], actual: &[S], positive: &str) -> Result<f64, EvalError> {
    Ok(roc_curve(scores, actual, positive)?.auc())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AucEstimate {
    pub value: f64,
    pub se: f64,
    pub ci: Interval,
    pub confidence: f64,
    pub method: String,
    pub folds: usize,
    pub fold_values: Vec<f64>,
}

impl AucEstimate {
    pub fn to_tsv(&self) -> String {
        format!(
            "cvAUC\tse\tci\tconfidence\tfolds\n{:.3}\t{:.4}\t({:.3},{:.3})\t{}\t{}\n",
            self.value, self.se, self.ci.lower, self.ci.upper, self.confidence, self.folds
        )
    }
}

/// Mean of per-fold AUCs with a normal interval from their standard error.
pub fn fold_mean_estimate(fold_values: &[f64], confidence: f64) -> Result<AucEstimate, EvalError> {
    let k = fold_values.len();
    if k < 2 {
        return Err(EvalError::TooFewFolds(k));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(EvalError::Confidence(confidence));
    }
    let kf = k as f64;
    // identical folds get an exact zero spread instead of rounding noise
    let value = if fold_values.iter().all(|&v| v == fold_values[0]) {
        fold_values[0]
    } else {
        fold_values.iter().sum::<f64>() / kf
    };
    let var = fold_values.iter().map(|v| (v - value).powi(2)).sum::<f64>() / (kf - 1.0);
    let se = var.sqrt() / kf.sqrt();
    let z = normal_quantile(0.5 + confidence / 2.0);
    Ok(AucEstimate {
        value,
        se,
        ci: Interval {
            lower: (value - z * se).max(0.0),
            upper: (value + z * se).min(1.0),
        },
        confidence,
        method: CV_METHOD.to_string(),
        folds: k,
        fold_values: fold_values.to_vec(),
    })
}

/// Cross-validated AUC over per-fold `(scores, labels)`.
pub fn cv_auc<S: AsRef<str>>(
    folds: &[(Vec<f64>, Vec<S>)],
    positive: &str,
    confidence: f64,
) -> Result<AucEstimate, EvalError> {
    if folds.len() < 2 {
        return Err(EvalError::TooFewFolds(folds.len()));
    }
    let values = folds
        .iter()
        .map(|(s, a)| auc(s, a, positive))
        .collect::<Result<Vec<_>, _>>()?;
    fold_mean_estimate(&values, confidence)
}

/// Fold index per row; each class is shuffled on its own stream and dealt
/// round-robin so every fold holds both classes.
pub fn stratified_folds<S: AsRef<str>>(
    actual: &[S],
    positive: &str,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    if k < 2 {
        return Err(EvalError::TooFewFolds(k));
    }
    let is_pos: Vec<bool> = actual.iter().map(|a| a.as_ref() == positive).collect();
    let mut fold = vec![0; actual.len()];
    for (stream_idx, class) in [true, false].into_iter().enumerate() {
        let mut rows: Vec<usize> = (0..actual.len()).filter(|&i| is_pos[i] == class).collect();
        if rows.len() < k {
            return Err(EvalError::SmallClass {
                positive: class,
                count: rows.len(),
                k,
            });
        }
        shuffle(&mut rows, &mut stream(seed, stream_idx as u64));
        for (j, r) in rows.into_iter().enumerate() {
            fold[r] = j % k;
        }
    }
    Ok(fold)
}
