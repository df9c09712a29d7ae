use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Column, ColumnData, ColumnKind, ColumnSpec, ColumnTable, TableError};

/// Parsing options for [`read_csv_from`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Cell texts that become missing cells.
    pub missing_markers: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            missing_markers: vec![String::new(), "NA".to_string()],
        }
    }
}

pub fn read_csv(
    path: impl AsRef<Path>,
    schema: Option<&[ColumnSpec]>,
) -> Result<ColumnTable, TableError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv_from(file, schema, &CsvOptions::default())
}

/// Reads a headed, comma-separated table. Columns named in `schema` are
/// parsed as declared; all others are inferred (numeric, then boolean, then
/// categorical).
pub fn read_csv_from<R: Read>(
    reader: R,
    schema: Option<&[ColumnSpec]>,
    options: &CsvOptions,
) -> Result<ColumnTable, TableError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| TableError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();

    if let Some(schema) = schema {
        if let Some(spec) = schema.iter().find(|s| !header.contains(&s.name)) {
            return Err(TableError::UnknownColumn(spec.name.clone()));
        }
    }

    let width = header.len();
    let mut raw: Vec<Vec<Option<String>>> = vec![Vec::new(); width];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| TableError::Csv(format!("row {row}: {e}")))?;
        if record.len() != width {
            return Err(TableError::FieldCount {
                row,
                expected: width,
                found: record.len(),
            });
        }
        for (col, field) in raw.iter_mut().zip(record.iter()) {
            if options.missing_markers.iter().any(|m| m == field) {
                col.push(None);
            } else {
                col.push(Some(field.to_string()));
            }
        }
    }
    let rows = raw.first().map_or(0, Vec::len);

    let mut columns = Vec::with_capacity(width);
    for (name, cells) in header.into_iter().zip(raw) {
        let declared = schema
            .and_then(|s| s.iter().find(|c| c.name == name))
            .cloned();
        let spec = match declared {
            Some(spec) => spec,
            None => ColumnSpec::new(name, infer_kind(&cells)),
        };
        columns.push(build_column(spec, cells)?);
    }
    ColumnTable::with_row_count(columns, rows)
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "True" => Some(true),
        "false" | "False" => Some(false),
        _ => None,
    }
}

fn infer_kind(cells: &[Option<String>]) -> ColumnKind {
    let mut present = cells.iter().flatten().peekable();
    if present.peek().is_none() {
        return ColumnKind::Categorical;
    }
    if cells.iter().flatten().all(|s| parse_number(s).is_some()) {
        ColumnKind::Numeric
    } else if cells.iter().flatten().all(|s| parse_bool(s).is_some()) {
        ColumnKind::Boolean
    } else {
        ColumnKind::Categorical
    }
}

fn build_column(spec: ColumnSpec, cells: Vec<Option<String>>) -> Result<Column, TableError> {
    if !spec.nullable {
        if let Some(r) = cells.iter().position(Option::is_none) {
            return Err(TableError::NotNullable {
                column: spec.name,
                row: r + 1,
            });
        }
    }
    let parse_err = |row: usize, value: &str| TableError::Parse {
        column: spec.name.clone(),
        row: row + 1,
        value: value.to_string(),
        kind: spec.kind,
    };
    let data = match spec.kind {
        ColumnKind::Numeric => ColumnData::Numeric(
            cells
                .iter()
                .enumerate()
                .map(|(r, c)| match c {
                    None => Ok(None),
                    Some(s) => parse_number(s).map(Some).ok_or_else(|| parse_err(r, s)),
                })
                .collect::<Result<_, _>>()?,
        ),
        ColumnKind::Boolean => ColumnData::Boolean(
            cells
                .iter()
                .enumerate()
                .map(|(r, c)| match c {
                    None => Ok(None),
                    Some(s) => parse_bool(s).map(Some).ok_or_else(|| parse_err(r, s)),
                })
                .collect::<Result<_, _>>()?,
        ),
        _ => ColumnData::Text(cells),
    };
    Column::new(spec, data)
}

pub fn write_csv(table: &ColumnTable, path: impl AsRef<Path>) -> Result<(), TableError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv_to(table, std::io::BufWriter::new(file))
}

/// Missing cells are written as empty fields, booleans as `True`/`False`,
/// numbers in shortest round-trip form.
pub fn write_csv_to<W: Write>(table: &ColumnTable, writer: W) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let csv_err = |e: csv::Error| TableError::Csv(e.to_string());
    w.write_record(table.names()).map_err(csv_err)?;
    let mut record: Vec<String> = Vec::with_capacity(table.n_columns());
    for r in 0..table.row_count() {
        record.clear();
        record.extend(
            table
                .columns()
                .iter()
                .map(|c| c.cell(r).render().unwrap_or_default()),
        );
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| TableError::Csv(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Cell;

    fn parse(text: &str) -> Result<ColumnTable, TableError> {
        read_csv_from(text.as_bytes(), None, &CsvOptions::default())
    }

    #[test]
    fn minimal_parse_infers_kinds() {
        let t = parse("a,b\n1,x\n2,y\n").unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(t.column("a").unwrap().kind(), ColumnKind::Numeric);
        assert_eq!(t.column("b").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn empty_field_is_missing_not_category() {
        let t = parse("a,b\n1,\n2,y\n").unwrap();
        assert_eq!(t.column("b").unwrap().cell(0), Cell::Missing);
        let t = parse("a,b\nNA,x\n2,y\n").unwrap();
        assert_eq!(t.column("a").unwrap().kind(), ColumnKind::Numeric);
        assert_eq!(t.column("a").unwrap().cell(0), Cell::Missing);
    }

    #[test]
    fn boolean_inference() {
        let t = parse("f\nTrue\nfalse\n\n").unwrap();
        // the blank line is skipped by the reader, not a missing row
        assert_eq!(t.column("f").unwrap().kind(), ColumnKind::Boolean);
        let t = parse("f,g\nTrue,1\nyes,2\n").unwrap();
        assert_eq!(t.column("f").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn declared_numeric_parse_error_names_column_and_row() {
        let schema = [ColumnSpec::new("a", ColumnKind::Numeric)];
        let err = read_csv_from(
            "a,b\n1,x\nabc,y\n".as_bytes(),
            Some(&schema),
            &CsvOptions::default(),
        )
        .unwrap_err();
        match err {
            TableError::Parse { column, row, .. } => {
                assert_eq!(column, "a");
                assert_eq!(row, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_field_count_reports_row() {
        let err = parse("a,b\n1,2\n3\n").unwrap_err();
        assert!(matches!(
            err,
            TableError::FieldCount {
                row: 2,
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn non_nullable_rejects_missing() {
        let schema = [ColumnSpec::new("a", ColumnKind::Numeric).required()];
        let err = read_csv_from(
            "a\n1\n\"\"\n".as_bytes(),
            Some(&schema),
            &CsvOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, TableError::NotNullable { row: 2, .. }));
    }

    #[test]
    fn unreadable_file() {
        assert!(matches!(
            read_csv("/definitely/not/here.csv", None),
            Err(TableError::Io { .. })
        ));
    }

    #[test]
    fn quoted_fields_round_trip() {
        let t = parse("name,v\n\"Heavy Rain, Fog\",1.5\n\"say \"\"hi\"\"\",\n").unwrap();
        let mut out = Vec::new();
        write_csv_to(&t, &mut out).unwrap();
        let back = parse(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
