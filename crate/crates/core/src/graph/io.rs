//! Plain-text graph files: whitespace-separated edge list, header-less
//! attribute CSV, and one integer label per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Adjacency, Graph, Label};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn read_attributes<T: Scalar>(path: &Path) -> Result<DenseMatrix<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        let mut row = Vec::with_capacity(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("invalid number `{field}`")))?;
            if !v.is_finite() {
                return Err(Error::Value(format!(
                    "{}:{line}: non-finite attribute `{field}`",
                    path.display()
                )));
            }
            row.push(T::lit(v));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

fn read_edges(path: &Path, n: usize) -> Result<Vec<(usize, usize)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut edges = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(path, lineno, format!("expected `u v`, found `{trimmed}`")));
        };
        let parse = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid node id `{s}`")))
        };
        let (u, v) = (parse(a)?, parse(b)?);
        for id in [u, v] {
            if id >= n {
                return Err(Error::Index { id, n });
            }
        }
        edges.push((u, v));
    }
    Ok(edges)
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<Label>> {
    let reader = BufReader::new(File::open(path)?);
    let mut labels = Vec::with_capacity(n);
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let label = trimmed
            .parse::<u8>()
            .ok()
            .and_then(Label::from_code)
            .ok_or_else(|| parse_err(path, k + 1, format!("invalid label `{trimmed}`")))?;
        labels.push(label);
    }
    Ok(labels)
}

/// Reads a graph. The node count is the number of attribute rows.
pub fn load_graph<T: Scalar>(
    edge_path: impl AsRef<Path>,
    attr_path: impl AsRef<Path>,
    label_path: Option<&Path>,
) -> Result<Graph<T>> {
    let attributes = read_attributes::<T>(attr_path.as_ref())?;
    let n = attributes.rows();
    let edges = read_edges(edge_path.as_ref(), n)?;
    let adjacency = Adjacency::from_edges(n, edges)?;
    let labels = label_path.map(|p| read_labels(p, n)).transpose()?;
    Graph::new(adjacency, attributes, labels)
}

/// Writes the three plain-text files; the label file only when labels exist
/// and a path is given.
pub fn save_graph<T: Scalar>(
    g: &Graph<T>,
    edge_path: impl AsRef<Path>,
    attr_path: impl AsRef<Path>,
    label_path: Option<&Path>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(edge_path)?);
    for (i, j) in g.adjacency().edges() {
        writeln!(w, "{i} {j}")?;
    }
    w.flush()?;

    let mut w = BufWriter::new(File::create(attr_path)?);
    for i in 0..g.n() {
        let row: Vec<String> = g.attributes().row(i).iter().map(|v| v.as_f64().to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;

    if let (Some(path), Some(labels)) = (label_path, g.labels()) {
        let mut w = BufWriter::new(File::create(path)?);
        for l in labels {
            writeln!(w, "{}", l.code())?;
        }
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn smallest_graph() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "0 1\n");
        let a = write(dir.path(), "a.csv", "1,0\n0,1\n");
        let g: Graph<f64> = load_graph(&e, &a, None).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.adjacency().to_dense::<f64>().data(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn reversed_duplicate_is_one_edge() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "0 1\n1 0\n\n");
        let a = write(dir.path(), "a.csv", "1\n2\n");
        let g: Graph<f64> = load_graph(&e, &a, None).unwrap();
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "0 1\n1 x\n");
        let a = write(dir.path(), "a.csv", "1\n2\n");
        match load_graph::<f64>(&e, &a, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn node_id_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "0 5\n");
        let a = write(dir.path(), "a.csv", "1\n2\n");
        assert!(matches!(
            load_graph::<f64>(&e, &a, None),
            Err(Error::Index { id: 5, n: 2 })
        ));
    }

    #[test]
    fn non_finite_attribute() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.txt", "0 1\n");
        let a = write(dir.path(), "a.csv", "1\nNaN\n");
        assert!(matches!(load_graph::<f64>(&e, &a, None), Err(Error::Value(_))));
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let x = DenseMatrix::from_rows(&[[0.1, -2.5], [3.0, 1e-9], [0.0, 7.25]]).unwrap();
        let g = Graph::from_edges([(0, 2), (1, 2)], x)
            .unwrap()
            .with_labels(vec![Label::Normal, Label::StructAnom, Label::MixedAnom])
            .unwrap();
        let (e, a, l) = (dir.path().join("e"), dir.path().join("a"), dir.path().join("l"));
        save_graph(&g, &e, &a, Some(&l)).unwrap();
        let back: Graph<f64> = load_graph(&e, &a, Some(&l)).unwrap();
        assert_eq!(back, g);
    }
}
