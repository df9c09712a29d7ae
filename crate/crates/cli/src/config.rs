use std::path::{Path, PathBuf};

use accsev::forest::ForestConfig;
use accsev::partition::{RebalanceConfig, RebalanceMode};
use accsev::prep::{CleaningConfig, SEVERE, SEVERITY};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Model variables by their US-Accidents column names.
pub const DEFAULT_FEATURES: [&str; 29] = [
    "Temperature(F)",
    "Humidity(%)",
    "Pressure(in)",
    "Visibility(mi)",
    "Wind_Speed(mph)",
    "Precipitation(in)",
    "Amenity",
    "Bump",
    "Crossing",
    "Give_Way",
    "Junction",
    "No_Exit",
    "Railway",
    "Roundabout",
    "Station",
    "Stop",
    "Traffic_Calming",
    "Traffic_Signal",
    "Sunrise_Sunset",
    "Civil_Twilight",
    "Nautical_Twilight",
    "Astronomical_Twilight",
    "Clear",
    "Cloud",
    "Rain",
    "Heavy_Rain",
    "Snow",
    "Heavy_Snow",
    "Fog",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub target: String,
    pub positive: String,
    pub features: Vec<String>,
    pub alpha: f64,
    /// Share of rows sent to the training set.
    pub split_ratio: f64,
    pub stratify: bool,
    /// Score at or above which a row is called positive.
    pub threshold: f64,
    pub cv_folds: usize,
    pub confidence: f64,
    pub eda_columns: Vec<String>,
    pub cleaning: CleaningConfig,
    pub rebalance: RebalanceConfig,
    pub forest: ForestConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            out_dir: PathBuf::from("out"),
            seed: 42,
            target: SEVERITY.to_string(),
            positive: SEVERE.to_string(),
            features: DEFAULT_FEATURES.iter().map(|s| s.to_string()).collect(),
            alpha: 0.05,
            split_ratio: 2.0 / 3.0,
            stratify: true,
            threshold: 0.5,
            cv_folds: 5,
            confidence: 0.95,
            eda_columns: ["Severity", "Month", "Timezone", "Day", "State"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            cleaning: CleaningConfig::default(),
            rebalance: RebalanceConfig {
                mode: RebalanceMode::Both,
                ..RebalanceConfig::default()
            },
            forest: ForestConfig::default(),
        }
    }
}

/// Pipeline stages that draw random numbers; each gets its own seed.
#[derive(Debug, Clone, Copy)]
pub enum Stage {
    Split = 1,
    Balance = 2,
    Forest = 3,
    Folds = 4,
}

impl PipelineConfig {
    /// Reads a TOML config. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(input) = &cfg.input {
            cfg.input = Some(base.join(input));
        }
        cfg.out_dir = base.join(&cfg.out_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.cleaning
            .validate()
            .map_err(|e| CliError::usage(e.to_string()))?;
        let checks = [
            (
                self.alpha > 0.0 && self.alpha < 1.0,
                "alpha must lie in (0, 1)",
            ),
            (
                self.split_ratio > 0.0 && self.split_ratio < 1.0,
                "split_ratio must lie in (0, 1)",
            ),
            (
                self.confidence > 0.0 && self.confidence < 1.0,
                "confidence must lie in (0, 1)",
            ),
            (self.cv_folds >= 2, "cv_folds must be at least 2"),
            (!self.features.is_empty(), "features must not be empty"),
        ];
        match checks.iter().find(|c| !c.0) {
            Some((_, msg)) => Err(CliError::usage(*msg)),
            None => Ok(()),
        }
    }

    pub fn stage_seed(&self, stage: Stage) -> u64 {
        self.seed
            .wrapping_add((stage as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            seed: self.stage_seed(Stage::Forest),
            ..self.forest.clone()
        }
    }

    pub fn rebalance_config(&self) -> RebalanceConfig {
        RebalanceConfig {
            seed: self.stage_seed(Stage::Balance),
            ..self.rebalance
        }
    }
}
