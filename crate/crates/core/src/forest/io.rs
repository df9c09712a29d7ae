//! Plain-text model files.
//!
//! Line-oriented, tab-separated. Strings are JSON string literals, floats
//! use the shortest representation that parses back to the same value.
//! Trees are listed node by node in preorder; a split's left child is the
//! next node and its right child follows the left subtree.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{
    Encoding, FeatureKind, FeatureSpec, ForestConfig, ForestError, ForestModel, Node, SplitRule,
    Tree,
};

pub const FORMAT_VERSION: &str = "accsev-forest v1";

fn q(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

pub fn write_model<W: Write>(m: &ForestModel, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{FORMAT_VERSION}")?;
    writeln!(w, "target\t{}", q(&m.target))?;
    writeln!(w, "classes\t{}\t{}", q(&m.classes[0]), q(&m.classes[1]))?;
    writeln!(w, "positive\t{}", m.positive)?;
    let config = serde_json::to_string(&m.config).expect("config serializes");
    writeln!(w, "config\t{config}")?;
    writeln!(w, "features\t{}", m.features.len())?;
    for (f, mdg) in m.features.iter().zip(&m.importance) {
        let enc = match &f.encoding {
            Encoding::Value => "value".to_string(),
            Encoding::Flag => "flag".to_string(),
            Encoding::Level(l) => format!("level\t{}", q(l)),
        };
        writeln!(
            w,
            "f\t{}\t{}\t{}\t{mdg}\t{enc}",
            q(&f.name),
            q(&f.source),
            f.kind.as_str()
        )?;
    }
    match m.oob_error {
        Some(e) => writeln!(w, "oob\t{e}")?,
        None => writeln!(w, "oob\tnone")?,
    }
    writeln!(w, "trees\t{}", m.trees.len())?;
    for t in &m.trees {
        writeln!(w, "tree\t{}", t.nodes.len())?;
        for n in &t.nodes {
            match n {
                Node::Split {
                    rule,
                    counts,
                    decrease,
                    ..
                } => writeln!(
                    w,
                    "S\t{}\t{}\t{}\t{}\t{decrease}",
                    rule.feature, rule.threshold, counts[0], counts[1]
                )?,
                Node::Leaf { counts } => writeln!(w, "L\t{}\t{}", counts[0], counts[1])?,
            }
        }
    }
    writeln!(w, "end")?;
    w.flush()
}

pub fn save_model(m: &ForestModel, path: impl AsRef<Path>) -> Result<(), ForestError> {
    let path = path.as_ref();
    let io_err = |source| ForestError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_model(m, BufWriter::new(file)).map_err(io_err)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ForestModel, ForestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| ForestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model(BufReader::new(file))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn corrupt(&self, reason: impl Into<String>) -> ForestError {
        ForestError::Corrupt {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn next_line(&mut self) -> Result<String, ForestError> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.corrupt(e.to_string())),
            None => Err(self.corrupt("unexpected end of file")),
        }
    }

    /// Next line split on tabs, which must start with `key`.
    fn record(&mut self, key: &str) -> Result<Vec<String>, ForestError> {
        let line = self.next_line()?;
        let mut fields = line.split('\t').map(str::to_string);
        match fields.next() {
            Some(k) if k == key => Ok(fields.collect()),
            other => Err(self.corrupt(format!("expected {key:?}, found {other:?}"))),
        }
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T, ForestError> {
        s.parse()
            .map_err(|_| self.corrupt(format!("bad {what} {s:?}")))
    }

    fn string(&self, s: &str) -> Result<String, ForestError> {
        serde_json::from_str(s).map_err(|e| self.corrupt(format!("bad string {s:?}: {e}")))
    }

    fn float(&self, s: &str, what: &str) -> Result<f64, ForestError> {
        let v: f64 = self.parse(s, what)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.corrupt(format!("non-finite {what}")))
        }
    }

    fn arity(&self, fields: &[String], n: usize, key: &str) -> Result<(), ForestError> {
        if fields.len() == n {
            Ok(())
        } else {
            Err(self.corrupt(format!("{key} takes {n} fields, found {}", fields.len())))
        }
    }
}

fn read_tree<R: BufRead>(lines: &mut Lines<R>, n_features: usize) -> Result<Tree, ForestError> {
    let header = lines.record("tree")?;
    lines.arity(&header, 1, "tree")?;
    let n_nodes: usize = lines.parse(&header[0], "node count")?;
    if n_nodes == 0 {
        return Err(lines.corrupt("empty tree"));
    }
    let mut nodes: Vec<Node> = Vec::with_capacity(n_nodes);
    // splits still waiting for their right child
    let mut open: Vec<usize> = Vec::new();
    for i in 0..n_nodes {
        let line = lines.next_line()?;
        let fields: Vec<&str> = line.split('\t').collect();
        let counts = |a: &str, b: &str| -> Result<[u64; 2], ForestError> {
            Ok([lines.parse(a, "count")?, lines.parse(b, "count")?])
        };
        let node = match fields.as_slice() {
            ["S", f, thr, c0, c1, dec] => {
                let feature: usize = lines.parse(f, "feature index")?;
                if feature >= n_features {
                    return Err(lines.corrupt(format!("feature index {feature} out of range")));
                }
                Node::Split {
                    rule: SplitRule {
                        feature,
                        kind: FeatureKind::Numeric,
                        threshold: lines.float(thr, "threshold")?,
                    },
                    left: usize::MAX,
                    right: usize::MAX,
                    counts: counts(c0, c1)?,
                    decrease: lines.float(dec, "decrease")?,
                }
            }
            ["L", c0, c1] => Node::Leaf {
                counts: counts(c0, c1)?,
            },
            _ => return Err(lines.corrupt(format!("bad node line {line:?}"))),
        };
        if i > 0 {
            match &mut nodes[i - 1] {
                Node::Split { left, .. } => *left = i,
                Node::Leaf { .. } => {
                    let parent = open
                        .pop()
                        .ok_or_else(|| lines.corrupt("node without parent"))?;
                    if let Node::Split { right, .. } = &mut nodes[parent] {
                        *right = i;
                    }
                }
            }
        }
        if matches!(node, Node::Split { .. }) {
            open.push(i);
        }
        nodes.push(node);
    }
    let unfinished = !open.is_empty() || matches!(nodes.last(), Some(Node::Split { .. }));
    if unfinished {
        return Err(lines.corrupt("tree ends inside a split"));
    }
    Ok(Tree { nodes })
}

pub fn read_model<R: BufRead>(reader: R) -> Result<ForestModel, ForestError> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let version = lines.next_line()?;
    if version != FORMAT_VERSION {
        return Err(ForestError::Version {
            found: version,
            expected: FORMAT_VERSION.to_string(),
        });
    }
    let f = lines.record("target")?;
    lines.arity(&f, 1, "target")?;
    let target = lines.string(&f[0])?;
    let f = lines.record("classes")?;
    lines.arity(&f, 2, "classes")?;
    let classes = [lines.string(&f[0])?, lines.string(&f[1])?];
    let f = lines.record("positive")?;
    lines.arity(&f, 1, "positive")?;
    let positive: usize = lines.parse(&f[0], "positive index")?;
    if positive > 1 {
        return Err(lines.corrupt("positive index must be 0 or 1"));
    }
    let f = lines.record("config")?;
    lines.arity(&f, 1, "config")?;
    let config: ForestConfig =
        serde_json::from_str(&f[0]).map_err(|e| lines.corrupt(format!("bad config: {e}")))?;

    let f = lines.record("features")?;
    lines.arity(&f, 1, "features")?;
    let n_features: usize = lines.parse(&f[0], "feature count")?;
    let mut features = Vec::with_capacity(n_features);
    let mut importance = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let f = lines.record("f")?;
        if f.len() < 5 {
            return Err(lines.corrupt("feature line too short"));
        }
        let kind = match f[2].as_str() {
            "numeric" => FeatureKind::Numeric,
            "boolean" => FeatureKind::Boolean,
            other => return Err(lines.corrupt(format!("unknown feature kind {other:?}"))),
        };
        let encoding = match (f[4].as_str(), f.len()) {
            ("value", 5) => Encoding::Value,
            ("flag", 5) => Encoding::Flag,
            ("level", 6) => Encoding::Level(lines.string(&f[5])?),
            _ => return Err(lines.corrupt("bad feature encoding")),
        };
        features.push(FeatureSpec {
            name: lines.string(&f[0])?,
            source: lines.string(&f[1])?,
            kind,
            encoding,
        });
        importance.push(lines.float(&f[3], "importance")?);
    }
    let f = lines.record("oob")?;
    lines.arity(&f, 1, "oob")?;
    let oob_error = match f[0].as_str() {
        "none" => None,
        s => Some(lines.float(s, "oob error")?),
    };
    let f = lines.record("trees")?;
    lines.arity(&f, 1, "trees")?;
    let n_trees: usize = lines.parse(&f[0], "tree count")?;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let mut tree = read_tree(&mut lines, n_features)?;
        for node in &mut tree.nodes {
            if let Node::Split { rule, .. } = node {
                rule.kind = features[rule.feature].kind;
            }
        }
        trees.push(tree);
    }
    let end = lines.next_line()?;
    if end != "end" {
        return Err(lines.corrupt(format!("expected end marker, found {end:?}")));
    }
    if n_trees != config.n_trees {
        return Err(lines.corrupt("tree count disagrees with config"));
    }
    Ok(ForestModel {
        config,
        target,
        classes,
        positive,
        features,
        trees,
        importance,
        oob_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::train_forest;
    use crate::table::{Column, ColumnTable};

    fn model() -> (ForestModel, ColumnTable) {
        let t = ColumnTable::new(vec![
            Column::numeric("x", (0..20).map(|i| Some(f64::from(i) * 0.1)).collect()),
            Column::from_strs(
                "tw",
                &(0..20)
                    .map(|i| Some(if i % 3 == 0 { "Night" } else { "Day" }))
                    .collect::<Vec<_>>(),
            ),
            Column::from_strs(
                "y",
                &(0..20)
                    .map(|i| {
                        Some(if i % 2 == 0 || i > 14 {
                            "severe"
                        } else {
                            "less severe"
                        })
                    })
                    .collect::<Vec<_>>(),
            ),
        ])
        .unwrap();
        let cfg = ForestConfig {
            n_trees: 5,
            seed: 9,
            compute_oob: true,
            ..ForestConfig::default()
        };
        (train_forest(&t, "y", &cfg).unwrap(), t)
    }

    fn to_string(m: &ForestModel) -> String {
        let mut buf = Vec::new();
        write_model(m, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip() {
        let (m, t) = model();
        let text = to_string(&m);
        let back = read_model(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        assert_eq!(
            back.predict_proba(&t).unwrap(),
            m.predict_proba(&t).unwrap()
        );
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn version_and_truncation() {
        let (m, _) = model();
        let text = to_string(&m);
        let wrong = text.replacen(FORMAT_VERSION, "accsev-forest v9", 1);
        assert!(matches!(
            read_model(wrong.as_bytes()),
            Err(ForestError::Version { .. })
        ));
        let cut = &text[..text.len() / 2];
        let cut = &cut[..cut.rfind('\n').unwrap() + 1];
        assert!(matches!(
            read_model(cut.as_bytes()),
            Err(ForestError::Corrupt { .. })
        ));
        let no_end = text.trim_end().trim_end_matches("end");
        assert!(matches!(
            read_model(no_end.as_bytes()),
            Err(ForestError::Corrupt { .. })
        ));
    }
}
