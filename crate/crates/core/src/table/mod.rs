//! Columnar in-memory table with typed columns and explicit missing cells.
//!
//! A [`ColumnTable`] is immutable once built: every operation returns a new
//! table and leaves its input untouched. Missing values are a distinct cell
//! state (`None` in the backing vectors), never a sentinel.

mod csv_io;
mod report;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{read_csv, read_csv_from, write_csv, write_csv_to, CsvOptions};
pub use report::{
    cross_count, group_count, missingness_report, CrossTable, FrequencyEntry, FrequencyTable,
    GroupKey, MissingnessReport, MissingnessRow,
};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("column {column:?}, row {row}: cannot parse {value:?} as {kind}")]
    Parse {
        column: String,
        row: usize,
        value: String,
        kind: ColumnKind,
    },
    #[error("column {column:?}, row {row}: missing value in non-nullable column")]
    NotNullable { column: String, row: usize },
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("column names must be non-empty")]
    EmptyName,
    #[error("column {column:?} has {found} cells, table has {expected} rows")]
    RaggedColumn {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("column {column:?} is {actual}, expected {expected}")]
    WrongKind {
        column: String,
        expected: ColumnKind,
        actual: ColumnKind,
    },
    #[error("tables have different schemas")]
    SchemaMismatch,
    #[error("row index {index} out of bounds for {rows} rows")]
    RowOutOfBounds { index: usize, rows: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Boolean,
    Categorical,
    Text,
    Timestamp,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Boolean => "boolean",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Text => "text",
            ColumnKind::Timestamp => "timestamp",
        }
    }

    /// Kinds stored as strings.
    pub fn is_textual(self) -> bool {
        matches!(
            self,
            ColumnKind::Categorical | ColumnKind::Text | ColumnKind::Timestamp
        )
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ColumnKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "numeric" => Ok(ColumnKind::Numeric),
            "boolean" => Ok(ColumnKind::Boolean),
            "categorical" => Ok(ColumnKind::Categorical),
            "text" => Ok(ColumnKind::Text),
            "timestamp" => Ok(ColumnKind::Timestamp),
            other => Err(format!("unknown column kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub nullable: bool,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            nullable: true,
        }
    }

    pub fn required(mut self) -> Self {
        self.nullable = false;
        self
    }
}

/// Backing storage. Categorical, text and timestamp columns share the
/// string representation; the spec's kind tells them apart.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Boolean(Vec<Option<bool>>),
    Text(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Boolean(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn take(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Boolean(v) => ColumnData::Boolean(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Text(v) => ColumnData::Text(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }
}

/// Borrowed view of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Missing,
    Number(f64),
    Bool(bool),
    Str(&'a str),
}

impl Cell<'_> {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(x) => Some(*x),
            _ => None,
        }
    }

    /// Canonical text form; `None` for missing cells.
    pub fn render(&self) -> Option<String> {
        match self {
            Cell::Missing => None,
            Cell::Number(x) => Some(format_number(*x)),
            Cell::Bool(b) => Some(if *b { "True" } else { "False" }.to_string()),
            Cell::Str(s) => Some((*s).to_string()),
        }
    }
}

pub(crate) fn format_number(x: f64) -> String {
    if x == 0.0 {
        // fold -0 into 0
        "0".to_string()
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    spec: ColumnSpec,
    data: ColumnData,
}

impl Column {
    pub fn new(spec: ColumnSpec, data: ColumnData) -> Result<Self, TableError> {
        if spec.name.is_empty() {
            return Err(TableError::EmptyName);
        }
        let storage_ok = match (&data, spec.kind) {
            (ColumnData::Numeric(_), ColumnKind::Numeric) => true,
            (ColumnData::Boolean(_), ColumnKind::Boolean) => true,
            (ColumnData::Text(_), k) => k.is_textual(),
            _ => false,
        };
        if !storage_ok {
            let actual = match data {
                ColumnData::Numeric(_) => ColumnKind::Numeric,
                ColumnData::Boolean(_) => ColumnKind::Boolean,
                ColumnData::Text(_) => ColumnKind::Categorical,
            };
            return Err(TableError::WrongKind {
                column: spec.name,
                expected: spec.kind,
                actual,
            });
        }
        Ok(Column { spec, data })
    }

    pub fn numeric(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Column {
            spec: ColumnSpec::new(name, ColumnKind::Numeric),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn boolean(name: impl Into<String>, values: Vec<Option<bool>>) -> Self {
        Column {
            spec: ColumnSpec::new(name, ColumnKind::Boolean),
            data: ColumnData::Boolean(values),
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Column {
            spec: ColumnSpec::new(name, ColumnKind::Categorical),
            data: ColumnData::Text(values),
        }
    }

    /// Categorical column from string slices; `None` entries are missing.
    pub fn from_strs(name: impl Into<String>, values: &[Option<&str>]) -> Self {
        Column::categorical(name, values.iter().map(|v| v.map(str::to_string)).collect())
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.spec.kind
    }

    pub fn spec(&self) -> &ColumnSpec {
        &self.spec
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cell(&self, row: usize) -> Cell<'_> {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map_or(Cell::Missing, Cell::Number),
            ColumnData::Boolean(v) => v[row].map_or(Cell::Missing, Cell::Bool),
            ColumnData::Text(v) => v[row].as_deref().map_or(Cell::Missing, Cell::Str),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell<'_>> + '_ {
        (0..self.len()).map(move |r| self.cell(r))
    }

    pub fn as_numeric(&self) -> Option<&[Option<f64>]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_boolean(&self) -> Option<&[Option<bool>]> {
        match &self.data {
            ColumnData::Boolean(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&[Option<String>]> {
        match &self.data {
            ColumnData::Text(v) => Some(v),
            _ => None,
        }
    }

    pub fn n_missing(&self) -> usize {
        self.cells().filter(Cell::is_missing).count()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.spec.name = name.into();
        self
    }

    pub fn with_kind(mut self, kind: ColumnKind) -> Result<Self, TableError> {
        self.spec.kind = kind;
        Column::new(self.spec, self.data)
    }

    fn take(&self, rows: &[usize]) -> Column {
        Column {
            spec: self.spec.clone(),
            data: self.data.take(rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTable {
    columns: Vec<Column>,
    row_count: usize,
}

/// One row of a table, handed to filter predicates.
#[derive(Clone, Copy)]
pub struct RowRef<'a> {
    table: &'a ColumnTable,
    row: usize,
}

impl<'a> RowRef<'a> {
    pub fn index(&self) -> usize {
        self.row
    }

    /// Cell by column name; `None` if the column does not exist.
    pub fn get(&self, column: &str) -> Option<Cell<'a>> {
        self.table.column(column).map(|c| c.cell(self.row))
    }

    pub fn cell(&self, column: usize) -> Cell<'a> {
        self.table.columns[column].cell(self.row)
    }
}

impl ColumnTable {
    pub fn new(columns: Vec<Column>) -> Result<Self, TableError> {
        let row_count = columns.first().map_or(0, Column::len);
        Self::with_row_count(columns, row_count)
    }

    /// Like [`ColumnTable::new`] but keeps an explicit row count, so a table
    /// with zero columns can still have rows.
    pub fn with_row_count(columns: Vec<Column>, row_count: usize) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name().is_empty() {
                return Err(TableError::EmptyName);
            }
            if !seen.insert(c.name()) {
                return Err(TableError::DuplicateColumn(c.name().to_string()));
            }
            if c.len() != row_count {
                return Err(TableError::RaggedColumn {
                    column: c.name().to_string(),
                    expected: row_count,
                    found: c.len(),
                });
            }
        }
        Ok(ColumnTable { columns, row_count })
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn schema(&self) -> Vec<ColumnSpec> {
        self.columns.iter().map(|c| c.spec.clone()).collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(Column::name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name() == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name() == name)
    }

    pub fn require(&self, name: &str) -> Result<&Column, TableError> {
        self.column(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn row(&self, row: usize) -> RowRef<'_> {
        RowRef { table: self, row }
    }

    /// Keeps only `names`, in the order given.
    pub fn select_columns(&self, names: &[&str]) -> Result<ColumnTable, TableError> {
        let columns = names
            .iter()
            .map(|n| self.require(n).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        ColumnTable::with_row_count(columns, self.row_count)
    }

    pub fn drop_columns(&self, names: &[&str]) -> Result<ColumnTable, TableError> {
        for n in names {
            self.require(n)?;
        }
        let columns = self
            .columns
            .iter()
            .filter(|c| !names.contains(&c.name()))
            .cloned()
            .collect();
        ColumnTable::with_row_count(columns, self.row_count)
    }

    /// Rows for which `keep` returns true, in their original order.
    pub fn filter_rows<F>(&self, keep: F) -> ColumnTable
    where
        F: Fn(&RowRef<'_>) -> bool,
    {
        let rows: Vec<usize> = (0..self.row_count)
            .filter(|&r| keep(&self.row(r)))
            .collect();
        self.take_rows_unchecked(&rows)
    }

    /// Filter on a single column's cells. The predicate sees missing cells as
    /// [`Cell::Missing`].
    pub fn filter_by<F>(&self, column: &str, keep: F) -> Result<ColumnTable, TableError>
    where
        F: Fn(Cell<'_>) -> bool,
    {
        let col = self.require(column)?;
        let rows: Vec<usize> = (0..self.row_count).filter(|&r| keep(col.cell(r))).collect();
        Ok(self.take_rows_unchecked(&rows))
    }

    /// Gathers rows by index. Indices may repeat (used for resampling).
    pub fn take_rows(&self, rows: &[usize]) -> Result<ColumnTable, TableError> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.row_count) {
            return Err(TableError::RowOutOfBounds {
                index: bad,
                rows: self.row_count,
            });
        }
        Ok(self.take_rows_unchecked(rows))
    }

    fn take_rows_unchecked(&self, rows: &[usize]) -> ColumnTable {
        ColumnTable {
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            row_count: rows.len(),
        }
    }

    /// Replaces the column with the same name in place, or appends it.
    pub fn with_column(&self, column: Column) -> Result<ColumnTable, TableError> {
        if column.len() != self.row_count {
            return Err(TableError::RaggedColumn {
                column: column.name().to_string(),
                expected: self.row_count,
                found: column.len(),
            });
        }
        let mut columns = self.columns.clone();
        match self.column_index(column.name()) {
            Some(i) => columns[i] = column,
            None => columns.push(column),
        }
        ColumnTable::with_row_count(columns, self.row_count)
    }

    /// Inserts `column` right after `anchor` (or appends when the anchor is
    /// absent).
    pub fn insert_after(&self, anchor: &str, column: Column) -> Result<ColumnTable, TableError> {
        if self.has_column(column.name()) {
            return Err(TableError::DuplicateColumn(column.name().to_string()));
        }
        let mut columns = self.columns.clone();
        let at = self.column_index(anchor).map_or(columns.len(), |i| i + 1);
        columns.insert(at, column);
        ColumnTable::with_row_count(columns, self.row_count)
    }

    /// Row-wise concatenation of tables that share a schema.
    pub fn concat(parts: &[&ColumnTable]) -> Result<ColumnTable, TableError> {
        let Some(first) = parts.first() else {
            return ColumnTable::new(Vec::new());
        };
        let mut columns: Vec<Column> = first.columns.clone();
        for part in &parts[1..] {
            if part.schema() != first.schema() {
                return Err(TableError::SchemaMismatch);
            }
            for (dst, src) in columns.iter_mut().zip(&part.columns) {
                match (&mut dst.data, &src.data) {
                    (ColumnData::Numeric(a), ColumnData::Numeric(b)) => a.extend_from_slice(b),
                    (ColumnData::Boolean(a), ColumnData::Boolean(b)) => a.extend_from_slice(b),
                    (ColumnData::Text(a), ColumnData::Text(b)) => a.extend(b.iter().cloned()),
                    _ => unreachable!("schemas compared equal"),
                }
            }
        }
        let rows = parts.iter().map(|p| p.row_count).sum();
        ColumnTable::with_row_count(columns, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ColumnTable {
        ColumnTable::new(vec![
            Column::numeric("a", vec![Some(1.0), Some(2.0), None]),
            Column::from_strs("State", &[Some("CA"), Some("TX"), Some("CA")]),
        ])
        .unwrap()
    }

    #[test]
    fn drop_keeps_row_count() {
        let t = sample().drop_columns(&["State"]).unwrap();
        assert_eq!(t.names().collect::<Vec<_>>(), vec!["a"]);
        assert_eq!(t.row_count(), 3);
    }

    #[test]
    fn drop_unknown_column_errors() {
        assert!(matches!(
            sample().drop_columns(&["nope"]),
            Err(TableError::UnknownColumn(_))
        ));
    }

    #[test]
    fn filter_by_state() {
        let t = sample();
        let ca = t.filter_by("State", |c| c.as_str() == Some("CA")).unwrap();
        assert_eq!(ca.row_count(), 2);
        assert_eq!(t.row_count(), 3, "input untouched");
        assert_eq!(ca.column("a").unwrap().cell(1), Cell::Missing);
    }

    #[test]
    fn filter_sees_missing_explicitly() {
        let t = sample();
        let kept = t.filter_rows(|r| r.get("a") == Some(Cell::Missing));
        assert_eq!(kept.row_count(), 1);
        let none = t
            .filter_by("a", |c| c.as_f64().is_some_and(|x| x > 5.0))
            .unwrap();
        assert_eq!(none.row_count(), 0);
        assert_eq!(none.n_columns(), 2);
    }

    #[test]
    fn rejects_ragged_and_duplicate_columns() {
        let r = ColumnTable::new(vec![
            Column::numeric("a", vec![Some(1.0)]),
            Column::numeric("b", vec![]),
        ]);
        assert!(matches!(r, Err(TableError::RaggedColumn { .. })));
        let d = ColumnTable::new(vec![
            Column::numeric("a", vec![Some(1.0)]),
            Column::numeric("a", vec![Some(2.0)]),
        ]);
        assert!(matches!(d, Err(TableError::DuplicateColumn(_))));
    }

    #[test]
    fn select_reorders() {
        let t = sample().select_columns(&["State", "a"]).unwrap();
        assert_eq!(t.names().collect::<Vec<_>>(), vec!["State", "a"]);
    }

    #[test]
    fn concat_appends_rows() {
        let t = sample();
        let both = ColumnTable::concat(&[&t, &t]).unwrap();
        assert_eq!(both.row_count(), 6);
        assert_eq!(both.column("State").unwrap().cell(4), Cell::Str("TX"));
    }
}
