use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ForestError;
use crate::table::{Cell, Column, ColumnKind, ColumnTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Boolean,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Boolean => "boolean",
        }
    }
}

/// How one model feature is read from its source column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Encoding {
    /// Numeric cell as is.
    Value,
    /// Boolean cell as 0/1.
    Flag,
    /// 1 when the categorical cell equals the level, else 0.
    Level(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub source: String,
    pub kind: FeatureKind,
    pub encoding: Encoding,
}

/// Column-major feature matrix. Boolean features hold 0.0 / 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    columns: Vec<Vec<f64>>,
    kinds: Vec<FeatureKind>,
    n_rows: usize,
}

impl Matrix {
    pub fn new(columns: Vec<Vec<f64>>, kinds: Vec<FeatureKind>) -> Result<Matrix, ForestError> {
        if columns.len() != kinds.len() {
            return Err(ForestError::Shape(format!(
                "{} columns but {} kinds",
                columns.len(),
                kinds.len()
            )));
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(ForestError::Shape("ragged feature columns".into()));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ForestError::Shape("non-finite feature value".into()));
        }
        Ok(Matrix {
            columns,
            kinds,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, f: usize) -> &[f64] {
        &self.columns[f]
    }

    pub fn kind(&self, f: usize) -> FeatureKind {
        self.kinds[f]
    }

    pub fn value(&self, row: usize, f: usize) -> f64 {
        self.columns[f][row]
    }
}

fn require_complete(col: &Column) -> Result<(), ForestError> {
    let n = col.n_missing();
    if n > 0 {
        return Err(ForestError::MissingValues {
            column: col.name().to_string(),
            count: n,
        });
    }
    Ok(())
}

/// Derives the feature layout of `columns`: numeric and boolean columns map
/// to one feature each, a two-level categorical to one indicator of its
/// second level, and a wider categorical to one indicator per level.
pub fn build_schema(t: &ColumnTable, columns: &[String]) -> Result<Vec<FeatureSpec>, ForestError> {
    let mut specs = Vec::new();
    for name in columns {
        let col = t.require(name)?;
        require_complete(col)?;
        let spec = |feature: String, kind, encoding| FeatureSpec {
            name: feature,
            source: name.clone(),
            kind,
            encoding,
        };
        match col.kind() {
            ColumnKind::Numeric => {
                specs.push(spec(name.clone(), FeatureKind::Numeric, Encoding::Value))
            }
            ColumnKind::Boolean => {
                specs.push(spec(name.clone(), FeatureKind::Boolean, Encoding::Flag))
            }
            ColumnKind::Categorical => {
                let text = col.as_text().expect("categorical storage");
                let levels: BTreeSet<&str> = text.iter().flatten().map(String::as_str).collect();
                let levels: Vec<&str> = levels.into_iter().collect();
                if levels.len() <= 2 {
                    let level = levels.last().copied().unwrap_or_default();
                    specs.push(spec(
                        name.clone(),
                        FeatureKind::Boolean,
                        Encoding::Level(level.to_string()),
                    ));
                } else {
                    for level in levels {
                        specs.push(spec(
                            format!("{name}={level}"),
                            FeatureKind::Boolean,
                            Encoding::Level(level.to_string()),
                        ));
                    }
                }
            }
            other => {
                return Err(ForestError::UnsupportedFeature {
                    column: name.clone(),
                    kind: other,
                })
            }
        }
    }
    Ok(specs)
}

/// Encodes `t` under a fixed feature layout. Levels unseen at training time
/// encode as 0 in every indicator.
pub fn encode(t: &ColumnTable, schema: &[FeatureSpec]) -> Result<Matrix, ForestError> {
    let mut columns = Vec::with_capacity(schema.len());
    for f in schema {
        let col = t
            .column(&f.source)
            .ok_or_else(|| ForestError::SchemaMismatch(format!("column {:?} absent", f.source)))?;
        require_complete(col)?;
        let mismatch = || {
            ForestError::SchemaMismatch(format!(
                "column {:?} is {}, model expects {:?}",
                f.source,
                col.kind(),
                f.encoding
            ))
        };
        let values: Vec<f64> = match &f.encoding {
            Encoding::Value => col
                .as_numeric()
                .ok_or_else(mismatch)?
                .iter()
                .flatten()
                .copied()
                .collect(),
            Encoding::Flag => col
                .as_boolean()
                .ok_or_else(mismatch)?
                .iter()
                .flatten()
                .map(|&b| f64::from(u8::from(b)))
                .collect(),
            Encoding::Level(level) => {
                if col.as_text().is_none() {
                    return Err(mismatch());
                }
                col.cells()
                    .map(|c| match c {
                        Cell::Str(s) if s == level => 1.0,
                        _ => 0.0,
                    })
                    .collect()
            }
        };
        columns.push(values);
    }
    let kinds = schema.iter().map(|f| f.kind).collect();
    let mut m = Matrix::new(columns, kinds)?;
    m.n_rows = t.row_count();
    Ok(m)
}
