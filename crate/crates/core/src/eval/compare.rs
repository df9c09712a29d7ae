use std::fmt::Write as _;

use serde::Serialize;

use super::{fmt3, MetricsReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `b - a`; `None` when either side is undefined.
    pub delta: Option<f64>,
}

impl ComparisonRow {
    pub fn new(metric: &str, a: Option<f64>, b: Option<f64>) -> Self {
        ComparisonRow {
            metric: metric.to_string(),
            a,
            b,
            delta: a.zip(b).map(|(a, b)| b - a),
        }
    }

    /// Name of the better model, `None` on a tie or an undefined side.
    pub fn winner<'a>(&self, names: &'a [String; 2]) -> Option<&'a str> {
        match self.delta? {
            d if d > 0.0 => Some(&names[1]),
            d if d < 0.0 => Some(&names[0]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub names: [String; 2],
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
}

impl Comparison {
    pub fn from_rows(names: [String; 2], rows: Vec<ComparisonRow>) -> Self {
        let notes = rows
            .iter()
            .filter(|r| r.delta.is_none())
            .map(|r| format!("{} skipped: undefined for at least one model", r.metric))
            .collect();
        Comparison { names, rows, notes }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("\t{}\t{}\n", self.names[0], self.names[1]);
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}", r.metric, fmt3(r.a), fmt3(r.b));
        }
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serialize")
    }
}

/// Accuracy, sensitivity and specificity of two models side by side.
pub fn compare_models(a: &MetricsReport, b: &MetricsReport, names: [&str; 2]) -> Comparison {
    Comparison::from_rows(
        names.map(str::to_string),
        vec![
            ComparisonRow::new("ACCURACY", Some(a.accuracy), Some(b.accuracy)),
            ComparisonRow::new("SENSITIVITY/RECALL", a.sensitivity, b.sensitivity),
            ComparisonRow::new("SPECIFICITY", a.specificity, b.specificity),
        ],
    )
}
