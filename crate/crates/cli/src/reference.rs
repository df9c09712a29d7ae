//! Reference results on the California subset of US-Accidents, and the
//! divergence report `repro` writes against them.

use serde::Serialize;

pub const ACCURACY: f64 = 0.812;
pub const AUC: f64 = 0.800;
pub const TOLERANCE: f64 = 0.03;
pub const TOP_VARIABLES: [&str; 6] = [
    "Wind_Speed(mph)",
    "Pressure(in)",
    "Humidity(%)",
    "Clear",
    "Visibility(mi)",
    "Cloud",
];
pub const MIN_TOP_OVERLAP: usize = 4;

pub const DATASET_HELP: &str = "\
The US-Accidents dataset is not bundled. Download it from Kaggle
(https://www.kaggle.com/datasets/sobhanmoosavi/us-accidents), unpack the CSV,
and pass its path with `accsev repro --input <csv>` or set `input` in the config.";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceRow {
    pub quantity: String,
    pub reference: String,
    pub computed: String,
    pub difference: Option<f64>,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub rows: Vec<DivergenceRow>,
}

fn numeric(quantity: &str, reference: f64, computed: f64) -> DivergenceRow {
    let d = computed - reference;
    DivergenceRow {
        quantity: quantity.to_string(),
        reference: format!("{reference:.3}"),
        computed: format!("{computed:.3}"),
        difference: Some(d),
        within: d.abs() <= TOLERANCE,
    }
}

impl Divergence {
    /// `top` is the computed variable ranking, most important first.
    pub fn new(accuracy: f64, auc: f64, top: &[String]) -> Self {
        let top6: Vec<&str> = top.iter().take(6).map(String::as_str).collect();
        let overlap = top6.iter().filter(|v| TOP_VARIABLES.contains(v)).count();
        Divergence {
            rows: vec![
                numeric("accuracy", ACCURACY, accuracy),
                numeric("auc", AUC, auc),
                DivergenceRow {
                    quantity: "top6_overlap".into(),
                    reference: TOP_VARIABLES.join(","),
                    computed: format!("{overlap}: {}", top6.join(",")),
                    difference: None,
                    within: overlap >= MIN_TOP_OVERLAP,
                },
            ],
        }
    }

    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("quantity\treference\tcomputed\tdifference\twithin\n");
        for r in &self.rows {
            let diff = r
                .difference
                .map_or("NA".to_string(), |d| format!("{d:+.3}"));
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                r.quantity, r.reference, r.computed, diff, r.within
            ));
        }
        out
    }
}
