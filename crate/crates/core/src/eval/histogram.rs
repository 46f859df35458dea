use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureTable;
use crate::error::{Error, Result};
use crate::graph::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    /// normal-normal
    Nn,
    /// normal-abnormal
    Na,
    /// abnormal-abnormal
    Aa,
}

impl EdgeClass {
    pub fn of(a: Label, b: Label) -> Self {
        match (a.is_anomaly(), b.is_anomaly()) {
            (false, false) => EdgeClass::Nn,
            (true, true) => EdgeClass::Aa,
            _ => EdgeClass::Na,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub kappa_raw: f64,
    pub kappa_norm: f64,
    pub edge_class: EdgeClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count_nn: usize,
    pub count_na: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub count: usize,
    pub mean: Option<f64>,
}

/// Normalized-curvature histogram split by edge class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureHistogram {
    pub bins: Vec<HistBin>,
    pub nn: ClassSummary,
    pub na: ClassSummary,
    pub aa: ClassSummary,
}

pub fn edge_records(table: &CurvatureTable, labels: &[Label]) -> Result<Vec<EdgeRecord>> {
    if labels.len() != table.n() {
        return Err(Error::arg(format!("{} labels for {} nodes", labels.len(), table.n())));
    }
    Ok(table
        .records
        .iter()
        .map(|r| EdgeRecord {
            i: r.i,
            j: r.j,
            kappa_raw: r.kappa_raw,
            kappa_norm: r.kappa_norm,
            edge_class: EdgeClass::of(labels[r.i], labels[r.j]),
        })
        .collect())
}

/// `bins` equal-width bins over `[0, 1]`; the last bin is closed.
pub fn curvature_histogram(edges: &[EdgeRecord], bins: usize) -> Result<CurvatureHistogram> {
    if bins == 0 {
        return Err(Error::arg("histogram needs at least one bin"));
    }
    let mut out: Vec<HistBin> = (0..bins)
        .map(|b| HistBin {
            bin_lo: b as f64 / bins as f64,
            bin_hi: (b + 1) as f64 / bins as f64,
            count_nn: 0,
            count_na: 0,
        })
        .collect();
    let mut sums = [(0usize, 0.0f64); 3];
    for e in edges {
        let v = e.kappa_norm;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Value(format!("normalized curvature {v} outside [0, 1]")));
        }
        let b = ((v * bins as f64) as usize).min(bins - 1);
        let slot = match e.edge_class {
            EdgeClass::Nn => {
                out[b].count_nn += 1;
                0
            }
            EdgeClass::Na => {
                out[b].count_na += 1;
                1
            }
            EdgeClass::Aa => 2,
        };
        sums[slot].0 += 1;
        sums[slot].1 += v;
    }
    let summary = |(count, sum): (usize, f64)| ClassSummary {
        count,
        mean: (count > 0).then(|| sum / count as f64),
    };
    Ok(CurvatureHistogram {
        bins: out,
        nn: summary(sums[0]),
        na: summary(sums[1]),
        aa: summary(sums[2]),
    })
}

fn write_csv<S: Serialize>(rows: &[S], path: &Path) -> Result<()> {
    let err = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_edges_csv(edges: &[EdgeRecord], path: impl AsRef<Path>) -> Result<()> {
    write_csv(edges, path.as_ref())
}

pub fn write_histogram_csv(h: &CurvatureHistogram, path: impl AsRef<Path>) -> Result<()> {
    write_csv(&h.bins, path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: f64, c: EdgeClass) -> EdgeRecord {
        EdgeRecord { i: 0, j: 1, kappa_raw: 0.0, kappa_norm: k, edge_class: c }
    }

    #[test]
    fn bins_and_means() {
        let edges = [
            rec(0.0, EdgeClass::Nn),
            rec(0.5, EdgeClass::Nn),
            rec(1.0, EdgeClass::Na),
            rec(0.49, EdgeClass::Na),
            rec(0.2, EdgeClass::Aa),
        ];
        let h = curvature_histogram(&edges, 2).unwrap();
        assert_eq!(h.bins[0], HistBin { bin_lo: 0.0, bin_hi: 0.5, count_nn: 1, count_na: 1 });
        assert_eq!(h.bins[1], HistBin { bin_lo: 0.5, bin_hi: 1.0, count_nn: 1, count_na: 1 });
        assert_eq!(h.nn.mean, Some(0.25));
        assert_eq!(h.aa.count, 1);
        assert!(curvature_histogram(&edges, 0).is_err());
        assert!(curvature_histogram(&[rec(1.5, EdgeClass::Nn)], 3).is_err());
    }

    #[test]
    fn classes_are_symmetric() {
        assert_eq!(EdgeClass::of(Label::Normal, Label::MixedAnom), EdgeClass::Na);
        assert_eq!(EdgeClass::of(Label::AttrAnom, Label::Normal), EdgeClass::Na);
        assert_eq!(EdgeClass::of(Label::AttrAnom, Label::StructAnom), EdgeClass::Aa);
    }

    #[test]
    fn csv_headers() {
        let dir = tempfile::tempdir().unwrap();
        let h = curvature_histogram(&[rec(0.3, EdgeClass::Nn)], 4).unwrap();
        let p = dir.path().join("h.csv");
        write_histogram_csv(&h, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("bin_lo,bin_hi,count_nn,count_na\n"));
        let p = dir.path().join("e.csv");
        write_edges_csv(&[rec(0.3, EdgeClass::Na)], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "i,j,kappa_raw,kappa_norm,edge_class\n0,1,0.0,0.3,na\n");
    }
}
