use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fmt::Write as _;

use serde::{Serialize, Serializer};

use super::{Cell, Column, ColumnKind, ColumnTable, TableError};

/// Per-column completeness summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingnessRow {
    pub name: String,
    pub kind: ColumnKind,
    /// Distinct non-missing values.
    pub distinct_levels: usize,
    pub n_complete: usize,
    pub n_miss: usize,
    pub miss_prop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingnessReport {
    pub row_count: usize,
    pub rows: Vec<MissingnessRow>,
}

fn distinct_levels(col: &Column) -> usize {
    if let Some(v) = col.as_numeric() {
        // -0.0 and 0.0 are one level
        v.iter()
            .flatten()
            .map(|x| if *x == 0.0 { 0u64 } else { x.to_bits() })
            .collect::<HashSet<_>>()
            .len()
    } else if let Some(v) = col.as_boolean() {
        v.iter().flatten().collect::<HashSet<_>>().len()
    } else {
        col.as_text()
            .unwrap_or_default()
            .iter()
            .flatten()
            .collect::<HashSet<_>>()
            .len()
    }
}

pub fn missingness_report(t: &ColumnTable) -> MissingnessReport {
    let rows = t
        .columns()
        .iter()
        .map(|c| {
            let n_miss = c.n_missing();
            MissingnessRow {
                name: c.name().to_string(),
                kind: c.kind(),
                distinct_levels: distinct_levels(c),
                n_complete: t.row_count() - n_miss,
                n_miss,
                miss_prop: if t.row_count() == 0 {
                    0.0
                } else {
                    n_miss as f64 / t.row_count() as f64
                },
            }
        })
        .collect();
    MissingnessReport {
        row_count: t.row_count(),
        rows,
    }
}

impl MissingnessReport {
    /// Tab-separated layout with `miss_prop` rounded to three decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Col.num\tV.name\tMode\tN.level\tncom\tnmiss\tMiss.prop\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                r.name,
                r.kind,
                r.distinct_levels,
                r.n_complete,
                r.n_miss,
                round3(r.miss_prop)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn round3(x: f64) -> String {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

/// Group key of a frequency table; missing cells get their own key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupKey {
    Value(String),
    Missing,
}

impl GroupKey {
    fn from_cell(cell: Cell<'_>) -> GroupKey {
        cell.render().map_or(GroupKey::Missing, GroupKey::Value)
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Value(v) => f.write_str(v),
            GroupKey::Missing => f.write_str("<missing>"),
        }
    }
}

impl Serialize for GroupKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            GroupKey::Value(v) => s.serialize_some(v),
            GroupKey::Missing => s.serialize_none(),
        }
    }
}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (GroupKey::Value(a), GroupKey::Value(b)) => a.cmp(b),
            (GroupKey::Value(_), GroupKey::Missing) => Ordering::Less,
            (GroupKey::Missing, GroupKey::Value(_)) => Ordering::Greater,
            (GroupKey::Missing, GroupKey::Missing) => Ordering::Equal,
        }
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyEntry {
    pub key: GroupKey,
    pub count: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub column: String,
    pub total: usize,
    /// Descending by count; ties ordered by key, missing last.
    pub entries: Vec<FrequencyEntry>,
}

impl FrequencyTable {
    pub fn get(&self, key: &str) -> Option<&FrequencyEntry> {
        self.entries
            .iter()
            .find(|e| matches!(&e.key, GroupKey::Value(v) if v == key))
    }

    pub fn missing(&self) -> Option<&FrequencyEntry> {
        self.entries.iter().find(|e| e.key == GroupKey::Missing)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{}\tcount\tproportion\n", self.column);
        for e in &self.entries {
            let _ = writeln!(out, "{}\t{}\t{:.6}", e.key, e.count, e.proportion);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("frequency table serializes")
    }
}

pub fn group_count(t: &ColumnTable, column: &str) -> Result<FrequencyTable, TableError> {
    let col = t.require(column)?;
    let mut counts: HashMap<GroupKey, usize> = HashMap::new();
    for cell in col.cells() {
        *counts.entry(GroupKey::from_cell(cell)).or_default() += 1;
    }
    let total = t.row_count();
    let mut entries: Vec<FrequencyEntry> = counts
        .into_iter()
        .map(|(key, count)| FrequencyEntry {
            key,
            count,
            proportion: count as f64 / total as f64,
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
    Ok(FrequencyTable {
        column: column.to_string(),
        total,
        entries,
    })
}

/// Two-way counts, e.g. severity class by month.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossTable {
    pub row_column: String,
    pub col_column: String,
    pub row_keys: Vec<GroupKey>,
    pub col_keys: Vec<GroupKey>,
    pub counts: Vec<Vec<usize>>,
}

impl CrossTable {
    pub fn to_tsv(&self) -> String {
        let mut out = format!("{}\\{}", self.row_column, self.col_column);
        for k in &self.col_keys {
            let _ = write!(out, "\t{k}");
        }
        out.push('\n');
        for (k, row) in self.row_keys.iter().zip(&self.counts) {
            let _ = write!(out, "{k}");
            for c in row {
                let _ = write!(out, "\t{c}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn cross_count(
    t: &ColumnTable,
    row_column: &str,
    col_column: &str,
) -> Result<CrossTable, TableError> {
    let rc = t.require(row_column)?;
    let cc = t.require(col_column)?;
    let mut grid: BTreeMap<GroupKey, BTreeMap<GroupKey, usize>> = BTreeMap::new();
    let mut col_keys: Vec<GroupKey> = Vec::new();
    for r in 0..t.row_count() {
        let rk = GroupKey::from_cell(rc.cell(r));
        let ck = GroupKey::from_cell(cc.cell(r));
        if !col_keys.contains(&ck) {
            col_keys.push(ck.clone());
        }
        *grid.entry(rk).or_default().entry(ck).or_default() += 1;
    }
    col_keys.sort();
    let row_keys: Vec<GroupKey> = grid.keys().cloned().collect();
    let counts = grid
        .values()
        .map(|m| {
            col_keys
                .iter()
                .map(|k| m.get(k).copied().unwrap_or(0))
                .collect()
        })
        .collect();
    Ok(CrossTable {
        row_column: row_column.to_string(),
        col_column: col_column.to_string(),
        row_keys,
        col_keys,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_missing() {
        let t = ColumnTable::new(vec![Column::numeric(
            "x",
            vec![Some(1.0), None, Some(3.0), Some(1.0)],
        )])
        .unwrap();
        let r = missingness_report(&t);
        assert_eq!(r.rows[0].n_miss, 1);
        assert_eq!(r.rows[0].n_complete, 3);
        assert_eq!(r.rows[0].distinct_levels, 2);
        assert_eq!(r.rows[0].miss_prop, 0.25);
    }

    #[test]
    fn wind_chill_and_precipitation_proportions() {
        // Completeness counts of the full 2,845,342-row source table.
        let total = 2_845_342usize;
        for (complete, expected) in [(2_375_699usize, "0.165"), (2_295_884, "0.193")] {
            let n_miss = total - complete;
            let report = MissingnessReport {
                row_count: total,
                rows: vec![MissingnessRow {
                    name: "x".into(),
                    kind: ColumnKind::Numeric,
                    distinct_levels: 0,
                    n_complete: complete,
                    n_miss,
                    miss_prop: n_miss as f64 / total as f64,
                }],
            };
            let line = report.to_tsv().lines().nth(1).unwrap().to_string();
            assert!(line.ends_with(expected), "{line}");
        }
        assert_eq!(total - 2_375_699, 469_643);
    }

    #[test]
    fn group_count_hand_count() {
        let t = ColumnTable::new(vec![Column::from_strs(
            "g",
            &[Some("a"), Some("b"), Some("a"), None],
        )])
        .unwrap();
        let f = group_count(&t, "g").unwrap();
        assert_eq!(f.get("a").unwrap().count, 2);
        assert_eq!(f.get("b").unwrap().count, 1);
        assert_eq!(f.missing().unwrap().count, 1);
        assert_eq!(f.entries[0].key, GroupKey::Value("a".into()));
    }

    #[test]
    fn group_count_single_group() {
        let t = ColumnTable::new(vec![Column::numeric("g", vec![Some(7.0); 4])]).unwrap();
        let f = group_count(&t, "g").unwrap();
        assert_eq!(f.entries.len(), 1);
        assert_eq!(f.entries[0].proportion, 1.0);
        assert!(group_count(&t, "nope").is_err());
    }

    #[test]
    fn cross_counts() {
        let t = ColumnTable::new(vec![
            Column::from_strs("m", &[Some("1"), Some("2"), Some("1")]),
            Column::from_strs("s", &[Some("x"), Some("y"), Some("y")]),
        ])
        .unwrap();
        let c = cross_count(&t, "m", "s").unwrap();
        assert_eq!(c.counts, vec![vec![1, 1], vec![0, 1]]);
    }
}
