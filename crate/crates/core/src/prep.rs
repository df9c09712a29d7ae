//! Cleaning and feature engineering for raw accident records.
//!
//! Every step is a pure function from table to table that appends an entry
//! to a [`CleanLog`]. [`clean`] runs the whole pipeline in its fixed order:
//! drop columns, weather flags, wind direction, time parts, median
//! imputation, row drops, severity binarization, state filter.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{Column, ColumnKind, ColumnTable, TableError};

pub const SEVERITY: &str = "Severity";
pub const WEATHER_CONDITION: &str = "Weather_Condition";
pub const WIND_DIRECTION: &str = "Wind_Direction";
pub const START_TIME: &str = "Start_Time";
pub const STATE: &str = "State";
pub const SEVERE: &str = "severe";
pub const LESS_SEVERE: &str = "less severe";

/// Weather flag columns, in output order.
pub const WEATHER_FLAGS: [&str; 7] = [
    "Clear",
    "Cloud",
    "Rain",
    "Heavy_Rain",
    "Snow",
    "Heavy_Snow",
    "Fog",
];

const WEEKDAYS: [&str; 7] = [
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

const CANONICAL_WIND: [&str; 18] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW",
    "NNW", "CALM", "VAR",
];

#[derive(Debug, Error)]
pub enum PrepError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("invalid cleaning config: {0}")]
    Config(String),
    #[error("column {0:?} is required but absent")]
    MissingColumn(String),
    #[error("column {0:?} has no non-missing values to impute from")]
    AllMissing(String),
    #[error("row {row}: severity {value} outside 1..=4")]
    SeverityDomain { row: usize, value: String },
    #[error("cannot read config {path}: {message}")]
    ConfigFile { path: String, message: String },
}

/// One substring rule: the flag fires when the lowercased condition contains
/// any keyword.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherRule {
    pub flag: String,
    pub keywords: Vec<String>,
}

impl WeatherRule {
    fn new(flag: &str, keywords: &[&str]) -> Self {
        WeatherRule {
            flag: flag.to_string(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
        }
    }

    fn fires(&self, condition: &str) -> bool {
        let lower = condition.to_lowercase();
        self.keywords
            .iter()
            .any(|k| lower.contains(&k.to_lowercase()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    /// Matched case-insensitively; absent names are logged and skipped.
    pub columns_to_drop: Vec<String>,
    pub wind_direction_map: BTreeMap<String, String>,
    pub weather_keyword_rules: Vec<WeatherRule>,
    pub impute_median_columns: Vec<String>,
    /// `"*"` stands for every column.
    pub drop_missing_row_columns: Vec<String>,
    pub severity_threshold: u8,
    pub state_filter: Option<String>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        let columns_to_drop = [
            "ID",
            "Description",
            "Distance(Mile)",
            "Distance(mi)",
            "End_time",
            "End_Lat",
            "End_lng",
            "City",
            "Weather_Timestamp",
            "Airport_code",
            "Street_Number",
            "Side",
            "Country",
            "Zipcode",
            "Turning_loop",
            "Wind_Chill(F)",
        ];
        let wind = [
            ("Calm", "CALM"),
            ("East", "E"),
            ("North", "N"),
            ("South", "S"),
            ("West", "W"),
            ("Variable", "VAR"),
        ];
        CleaningConfig {
            columns_to_drop: columns_to_drop.iter().map(|s| s.to_string()).collect(),
            wind_direction_map: wind
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            weather_keyword_rules: default_weather_rules(),
            impute_median_columns: vec!["Precipitation(in)".to_string()],
            drop_missing_row_columns: vec!["*".to_string()],
            severity_threshold: 3,
            state_filter: None,
        }
    }
}

pub fn default_weather_rules() -> Vec<WeatherRule> {
    vec![
        WeatherRule::new("Heavy_Snow", &["heavy snow", "blowing snow"]),
        WeatherRule::new("Heavy_Rain", &["heavy rain", "thunderstorm", "t-storm"]),
        WeatherRule::new("Snow", &["snow", "sleet", "wintry"]),
        WeatherRule::new("Rain", &["rain", "drizzle", "shower"]),
        WeatherRule::new("Fog", &["fog", "mist", "haze"]),
        WeatherRule::new("Cloud", &["cloud", "overcast"]),
        WeatherRule::new("Clear", &["clear", "fair"]),
    ]
}

impl CleaningConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PrepError> {
        let cfg: CleaningConfig =
            toml::from_str(text).map_err(|e| PrepError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PrepError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PrepError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), PrepError> {
        if !(2..=4).contains(&self.severity_threshold) {
            return Err(PrepError::Config(format!(
                "severity_threshold {} not in 2..=4",
                self.severity_threshold
            )));
        }
        let flags: BTreeSet<&str> = self
            .weather_keyword_rules
            .iter()
            .map(|r| r.flag.as_str())
            .collect();
        let expected: BTreeSet<&str> = WEATHER_FLAGS.iter().copied().collect();
        if flags != expected || self.weather_keyword_rules.len() != WEATHER_FLAGS.len() {
            return Err(PrepError::Config(format!(
                "weather rules must name each of {WEATHER_FLAGS:?} exactly once"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub action: String,
    pub rows_removed: usize,
    pub cells_changed: usize,
    pub notes: Vec<String>,
}

/// Append-only record of the cleaning steps applied to a table.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanLog {
    pub entries: Vec<LogEntry>,
}

impl CleanLog {
    fn push(
        &mut self,
        action: impl Into<String>,
        rows_removed: usize,
        cells_changed: usize,
    ) -> &mut LogEntry {
        self.entries.push(LogEntry {
            action: action.into(),
            rows_removed,
            cells_changed,
            notes: Vec::new(),
        });
        self.entries.last_mut().expect("just pushed")
    }

    pub fn rows_removed(&self) -> usize {
        self.entries.iter().map(|e| e.rows_removed).sum()
    }
}

impl LogEntry {
    fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CleanSummary {
    pub rows_before: usize,
    pub rows_after: usize,
    pub columns_before: usize,
    pub columns_after: usize,
    pub log: Vec<LogEntry>,
}

impl CleanSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "rows {} -> {}, columns {} -> {}\n",
            self.rows_before, self.rows_after, self.columns_before, self.columns_after
        );
        for (i, e) in self.log.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>2}. {} (rows removed {}, cells changed {})",
                i + 1,
                e.action,
                e.rows_removed,
                e.cells_changed
            );
            for n in &e.notes {
                let _ = writeln!(out, "      {n}");
            }
        }
        out
    }
}

pub fn drop_irrelevant_columns(
    t: &ColumnTable,
    cfg: &CleaningConfig,
    log: &mut CleanLog,
) -> Result<ColumnTable, PrepError> {
    let mut present = Vec::new();
    let mut absent = Vec::new();
    for wanted in &cfg.columns_to_drop {
        match t.names().find(|n| n.eq_ignore_ascii_case(wanted)) {
            Some(n) => present.push(n.to_string()),
            None => absent.push(wanted.clone()),
        }
    }
    let names: Vec<&str> = present.iter().map(String::as_str).collect();
    let out = t.drop_columns(&names)?;
    let entry = log.push("drop_irrelevant_columns", 0, 0);
    if !present.is_empty() {
        entry.note(format!("dropped {}", present.join(", ")));
    }
    if !absent.is_empty() {
        entry.note(format!(
            "warning: not present, skipped: {}",
            absent.join(", ")
        ));
    }
    Ok(out)
}

pub fn normalize_wind_direction(
    t: &ColumnTable,
    cfg: &CleaningConfig,
    log: &mut CleanLog,
) -> Result<ColumnTable, PrepError> {
    let Some(col) = t.column(WIND_DIRECTION) else {
        log.push("normalize_wind_direction", 0, 0)
            .note(format!("warning: {WIND_DIRECTION} absent, skipped"));
        return Ok(t.clone());
    };
    let Some(values) = col.as_text() else {
        return Err(TableError::WrongKind {
            column: WIND_DIRECTION.to_string(),
            expected: ColumnKind::Categorical,
            actual: col.kind(),
        }
        .into());
    };
    let mut changed = 0;
    let mut novel: BTreeSet<String> = BTreeSet::new();
    let out: Vec<Option<String>> = values
        .iter()
        .map(|v| {
            v.as_ref().map(|s| match cfg.wind_direction_map.get(s) {
                Some(m) => {
                    if m != s {
                        changed += 1;
                    }
                    m.clone()
                }
                None => {
                    if !CANONICAL_WIND.contains(&s.as_str()) {
                        novel.insert(s.clone());
                    }
                    s.clone()
                }
            })
        })
        .collect();
    let column = Column::categorical(WIND_DIRECTION, out);
    let entry = log.push("normalize_wind_direction", 0, changed);
    if !novel.is_empty() {
        let list: Vec<&str> = novel.iter().map(String::as_str).collect();
        entry.note(format!("unmapped values kept as is: {}", list.join(", ")));
    }
    Ok(t.with_column(column)?)
}

pub fn extract_weather_flags(
    t: &ColumnTable,
    cfg: &CleaningConfig,
    log: &mut CleanLog,
) -> Result<ColumnTable, PrepError> {
    let Some(col) = t.column(WEATHER_CONDITION) else {
        if WEATHER_FLAGS.iter().all(|f| t.has_column(f)) {
            log.push("extract_weather_flags", 0, 0)
                .note("flags already present");
            return Ok(t.clone());
        }
        return Err(PrepError::MissingColumn(WEATHER_CONDITION.to_string()));
    };
    let conditions: Vec<Option<String>> = col.cells().map(|c| c.render()).collect();
    let mut out = t.clone();
    for flag in WEATHER_FLAGS {
        let rule = cfg
            .weather_keyword_rules
            .iter()
            .find(|r| r.flag == flag)
            .ok_or_else(|| PrepError::Config(format!("no rule for flag {flag}")))?;
        let values = conditions
            .iter()
            .map(|c| Some(c.as_deref().is_some_and(|c| rule.fires(c))))
            .collect();
        out = out.with_column(Column::boolean(flag, values))?;
    }
    let out = out.drop_columns(&[WEATHER_CONDITION])?;
    log.push("extract_weather_flags", 0, 0).note(format!(
        "added {}; removed {WEATHER_CONDITION}",
        WEATHER_FLAGS.join(", ")
    ));
    Ok(out)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s.trim(), "%Y-%m-%d %H:%M:%S%.f").ok()
}

/// Adds `Year`, `Month` and `Day` (weekday name) from `Start_Time`, drops
/// rows whose timestamp does not parse, then removes `Start_Time`.
pub fn extract_time_parts(t: &ColumnTable, log: &mut CleanLog) -> Result<ColumnTable, PrepError> {
    let Some(col) = t.column(START_TIME) else {
        if ["Year", "Month", "Day"].iter().all(|c| t.has_column(c)) {
            log.push("extract_time_parts", 0, 0)
                .note("time parts already present");
            return Ok(t.clone());
        }
        return Err(PrepError::MissingColumn(START_TIME.to_string()));
    };
    let parsed: Vec<Option<NaiveDateTime>> = col
        .cells()
        .map(|c| c.render().and_then(|s| parse_timestamp(&s)))
        .collect();
    let bad: Vec<usize> = (0..parsed.len()).filter(|&r| parsed[r].is_none()).collect();
    let year = parsed
        .iter()
        .map(|d| d.map(|d| f64::from(d.year())))
        .collect();
    let month = parsed
        .iter()
        .map(|d| d.map(|d| f64::from(d.month())))
        .collect();
    let day = parsed
        .iter()
        .map(|d| d.map(|d| WEEKDAYS[d.weekday().num_days_from_monday() as usize].to_string()))
        .collect();
    let out = t
        .with_column(Column::numeric("Year", year))?
        .with_column(Column::numeric("Month", month))?
        .with_column(Column::categorical("Day", day))?;
    let out = out
        .filter_rows(|r| parsed[r.index()].is_some())
        .drop_columns(&[START_TIME])?;
    let entry = log.push("extract_time_parts", bad.len(), 0);
    if let Some(&first) = bad.first() {
        let shown = col
            .cell(first)
            .render()
            .unwrap_or_else(|| "<missing>".into());
        entry.note(format!(
            "error: {} unparseable {START_TIME} rows dropped (first at row {}: {shown:?})",
            bad.len(),
            first + 1
        ));
    }
    Ok(out)
}

/// Median of the non-missing cells; the mean of the two central values for
/// an even count.
pub fn median(values: &[Option<f64>]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().flatten().copied().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

pub fn impute_median(
    t: &ColumnTable,
    column: &str,
    log: &mut CleanLog,
) -> Result<ColumnTable, PrepError> {
    let col = t.require(column)?;
    let values = col.as_numeric().ok_or_else(|| TableError::WrongKind {
        column: column.to_string(),
        expected: ColumnKind::Numeric,
        actual: col.kind(),
    })?;
    let med = median(values).ok_or_else(|| PrepError::AllMissing(column.to_string()))?;
    let filled: Vec<Option<f64>> = values.iter().map(|v| Some(v.unwrap_or(med))).collect();
    let changed = col.n_missing();
    log.push(format!("impute_median {column}"), 0, changed)
        .note(format!("median {med}"));
    Ok(t.with_column(Column::numeric(column, filled))?)
}

pub fn drop_missing_rows(
    t: &ColumnTable,
    columns: &[String],
    log: &mut CleanLog,
) -> Result<ColumnTable, PrepError> {
    let names: Vec<String> = if columns.iter().any(|c| c == "*") {
        t.names().map(str::to_string).collect()
    } else {
        columns.to_vec()
    };
    let idx = names
        .iter()
        .map(|n| {
            t.column_index(n)
                .ok_or_else(|| TableError::UnknownColumn(n.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let out = t.filter_rows(|r| idx.iter().all(|&c| !r.cell(c).is_missing()));
    let removed = t.row_count() - out.row_count();
    let label = if columns.iter().any(|c| c == "*") {
        "drop_missing_rows *".to_string()
    } else {
        format!("drop_missing_rows {}", names.join(","))
    };
    log.push(label, removed, 0);
    Ok(out)
}

fn is_binarized(col: &Column) -> bool {
    col.as_text().is_some_and(|v| {
        v.iter()
            .all(|s| matches!(s.as_deref(), Some(SEVERE) | Some(LESS_SEVERE)))
    })
}

/// Replaces the 1-4 `Severity` column with the two-level target
/// (`severe` when `Severity >= threshold`).
pub fn binarize_severity(
    t: &ColumnTable,
    threshold: u8,
    log: &mut CleanLog,
) -> Result<ColumnTable, PrepError> {
    let col = t.require(SEVERITY)?;
    if is_binarized(col) {
        log.push("binarize_severity", 0, 0).note("already binary");
        return Ok(t.clone());
    }
    let mut out = Vec::with_capacity(col.len());
    for r in 0..col.len() {
        let cell = col.cell(r);
        let level = match cell.as_f64() {
            Some(x) if (1.0..=4.0).contains(&x) && x.fract() == 0.0 => x as u8,
            _ => {
                return Err(PrepError::SeverityDomain {
                    row: r + 1,
                    value: cell.render().unwrap_or_else(|| "<missing>".into()),
                })
            }
        };
        let label = if level >= threshold {
            SEVERE
        } else {
            LESS_SEVERE
        };
        out.push(Some(label.to_string()));
    }
    let n = out.len();
    log.push(format!("binarize_severity threshold={threshold}"), 0, n);
    Ok(t.with_column(Column::categorical(SEVERITY, out))?)
}

pub fn filter_state(
    t: &ColumnTable,
    code: &str,
    log: &mut CleanLog,
) -> Result<ColumnTable, PrepError> {
    let out = t.filter_by(STATE, |c| c.as_str() == Some(code))?;
    log.push(
        format!("filter_state {code}"),
        t.row_count() - out.row_count(),
        0,
    );
    Ok(out)
}

/// Runs every cleaning step in the fixed order.
pub fn clean(
    t: &ColumnTable,
    cfg: &CleaningConfig,
) -> Result<(ColumnTable, CleanSummary), PrepError> {
    cfg.validate()?;
    let mut log = CleanLog::default();
    let mut cur = drop_irrelevant_columns(t, cfg, &mut log)?;
    cur = extract_weather_flags(&cur, cfg, &mut log)?;
    cur = normalize_wind_direction(&cur, cfg, &mut log)?;
    cur = extract_time_parts(&cur, &mut log)?;
    for c in &cfg.impute_median_columns {
        if cur.has_column(c) {
            cur = impute_median(&cur, c, &mut log)?;
        } else {
            log.push(format!("impute_median {c}"), 0, 0)
                .note("warning: column absent, skipped");
        }
    }
    cur = drop_missing_rows(&cur, &cfg.drop_missing_row_columns, &mut log)?;
    cur = binarize_severity(&cur, cfg.severity_threshold, &mut log)?;
    if let Some(code) = &cfg.state_filter {
        cur = filter_state(&cur, code, &mut log)?;
    }
    let summary = CleanSummary {
        rows_before: t.row_count(),
        rows_after: cur.row_count(),
        columns_before: t.n_columns(),
        columns_after: cur.n_columns(),
        log: log.entries,
    };
    Ok((cur, summary))
}
