//! File-backed datasets.
//!
//! A manifest is a TOML file:
//!
//! ```toml
//! name = "acm"
//! n = 3025
//! V = 2
//! c = 3
//! relations = ["pap.txt", "psp.txt"]
//! attributes = "features.csv"
//! labels = "labels.txt"   # optional
//! ```
//!
//! Relative paths resolve against the manifest's directory. Edge lists hold
//! 0-indexed `src dst [weight]` lines (blank lines and `#` comments skipped);
//! every line adds its weight to both `(src, dst)` and `(dst, src)`, so
//! repeated lines accumulate. Attributes are a headerless dense CSV with one
//! row per node. Labels are one integer per line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DenseMatrix, MultiRelationalGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub n: usize,
    #[serde(rename = "V", alias = "views")]
    pub views: usize,
    pub c: usize,
    pub relations: Vec<PathBuf>,
    pub attributes: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| text[..s.start].lines().count().max(1)),
            message: e.message().to_string(),
        })?;
        if manifest.relations.len() != manifest.views {
            return Err(Error::Config(format!(
                "{}: manifest declares V = {} but lists {} relation files",
                path.display(),
                manifest.views,
                manifest.relations.len()
            )));
        }
        Ok(manifest)
    }

    fn resolve(&self, base: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads a symmetric adjacency from an edge list.
pub fn read_edge_list(path: &Path, n: usize) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut adj = DenseMatrix::zeros(n, n);
    for (line, content) in data_lines(&text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_error(path, line, format!("expected `src dst [weight]`, got {content:?}")));
        }
        let mut idx = [0usize; 2];
        for (k, field) in fields[..2].iter().enumerate() {
            let index: usize = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("invalid node index {field:?}")))?;
            if index >= n {
                return Err(Error::IndexOutOfRange {
                    path: path.to_path_buf(),
                    line,
                    index,
                    n,
                });
            }
            idx[k] = index;
        }
        let weight = match fields.get(2) {
            Some(w) => w
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite() && *w >= 0.0)
                .ok_or_else(|| parse_error(path, line, format!("invalid edge weight {w:?}")))?,
            None => 1.0,
        };
        let [s, d] = idx;
        adj[(s, d)] += weight;
        if s != d {
            adj[(d, s)] += weight;
        }
    }
    Ok(adj)
}

/// Reads a headerless dense CSV with exactly `n` rows.
pub fn read_attributes(path: &Path, n: usize) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if *width.get_or_insert(record.len()) != record.len() {
            return Err(parse_error(
                path,
                line,
                format!("expected {} columns, found {}", width.unwrap_or(0), record.len()),
            ));
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_error(path, line, format!("invalid number {field:?}")))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::RowCount {
            path: path.to_path_buf(),
            expected: n,
            found: rows,
        });
    }
    Ok(DenseMatrix::from_row_slice(n, width.unwrap_or(0), &values))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

/// Reads one non-negative integer label per line.
pub fn read_labels(path: &Path, n: Option<usize>) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let labels = data_lines(&text)
        .map(|(line, l)| {
            l.parse::<usize>()
                .map_err(|_| parse_error(path, line, format!("invalid label {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = n {
        if labels.len() != n {
            return Err(Error::RowCount {
                path: path.to_path_buf(),
                expected: n,
                found: labels.len(),
            });
        }
    }
    Ok(labels)
}

pub fn load_dataset(manifest_path: &Path) -> Result<MultiRelationalGraph> {
    let manifest = DatasetManifest::from_path(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let adjacency = manifest
        .relations
        .iter()
        .map(|p| read_edge_list(&manifest.resolve(base, p), manifest.n))
        .collect::<Result<Vec<_>>>()?;
    let attributes = read_attributes(&manifest.resolve(base, &manifest.attributes), manifest.n)?;
    let labels = match &manifest.labels {
        Some(p) => {
            let path = manifest.resolve(base, p);
            let labels = read_labels(&path, Some(manifest.n))?;
            if let Some(&bad) = labels.iter().find(|&&l| l >= manifest.c) {
                return Err(Error::Config(format!(
                    "{}: label {bad} outside [0, c = {})",
                    path.display(),
                    manifest.c
                )));
            }
            Some(labels)
        }
        None => None,
    };
    MultiRelationalGraph::new(adjacency, attributes, labels, manifest.c)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub(crate) fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for l in labels {
        writeln!(out, "{l}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes `graph` as a manifest plus edge lists, attributes and labels in
/// `dir`, returning the manifest path.
pub fn write_dataset(graph: &MultiRelationalGraph, dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = graph.n_nodes();
    let mut relations = Vec::new();
    for (v, adj) in graph.views().enumerate() {
        let file = PathBuf::from(format!("relation_{v}.txt"));
        let path = dir.join(&file);
        let mut out = create(&path)?;
        let io = |e| Error::io(&path, e);
        for i in 0..n {
            for j in i..n {
                let w = adj[(i, j)];
                if w != 0.0 {
                    if w == 1.0 {
                        writeln!(out, "{i} {j}").map_err(io)?;
                    } else {
                        writeln!(out, "{i} {j} {w:?}").map_err(io)?;
                    }
                }
            }
        }
        out.flush().map_err(io)?;
        relations.push(file);
    }
    write_matrix_csv(&dir.join("attributes.csv"), graph.attributes())?;
    let labels = match graph.labels() {
        Some(l) => {
            write_labels(&dir.join("labels.txt"), l)?;
            Some(PathBuf::from("labels.txt"))
        }
        None => None,
    };
    let manifest = DatasetManifest {
        name: name.to_string(),
        n,
        views: graph.n_views(),
        c: graph.n_clusters(),
        relations,
        attributes: PathBuf::from("attributes.csv"),
        labels,
    };
    let path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn edge_list_conventions() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.txt", "0 1\n");
        assert_eq!(read_edge_list(&p, 2).unwrap(), DenseMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let p = write(dir.path(), "dup.txt", "# comment\n0 1\n\n0 1\n1 2 0.5\n");
        let adj = read_edge_list(&p, 3).unwrap();
        assert_eq!((adj[(0, 1)], adj[(1, 0)], adj[(2, 1)]), (2.0, 2.0, 0.5));
    }

    #[test]
    fn edge_list_errors_carry_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.txt", "0 1\n0 5\n");
        match read_edge_list(&p, 3) {
            Err(Error::IndexOutOfRange { line, index, .. }) => assert_eq!((line, index), (2, 5)),
            other => panic!("unexpected {other:?}"),
        }
        let p = write(dir.path(), "bad.txt", "0 x\n");
        assert!(matches!(read_edge_list(&p, 3), Err(Error::Parse { line: 1, .. })));
        let p = write(dir.path(), "neg.txt", "0 1 -2\n");
        assert!(matches!(read_edge_list(&p, 3), Err(Error::Parse { .. })));
        assert!(matches!(read_edge_list(&dir.path().join("missing"), 3), Err(Error::Io { .. })));
    }

    #[test]
    fn attribute_row_count_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x.csv", "1,2\n3,4\n");
        assert_eq!(read_attributes(&p, 2).unwrap(), DenseMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert!(matches!(read_attributes(&p, 3), Err(Error::RowCount { expected: 3, found: 2, .. })));
        let p = write(dir.path(), "ragged.csv", "1,2\n3\n");
        assert!(read_attributes(&p, 2).is_err());
    }

    #[test]
    fn manifest_declares_acm_shape() {
        let m: DatasetManifest = toml::from_str(
            r#"
            name = "acm"
            n = 3025
            V = 2
            c = 3
            relations = ["pap.txt", "psp.txt"]
            attributes = "features.csv"
            labels = "labels.txt"
            "#,
        )
        .unwrap();
        assert_eq!((m.n, m.views, m.c), (3025, 2, 3));
    }

    #[test]
    fn missing_manifest_names_path() {
        let err = load_dataset(Path::new("/nonexistent/manifest.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/manifest.toml"));
    }
}
