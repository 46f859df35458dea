//! Attributed graphs and the propagation, masking and injection routines
//! every channel builds on.

mod distance;
mod inject;
mod io;
mod knn;
mod mask;
mod normalize;
mod propagate;
pub mod synthetic;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub use distance::{bfs_capped, hop_distances, HopDistances};
pub use inject::{inject_anomalies, InjectionConfig};
pub use io::{load_graph, save_graph};
pub use knn::{cosine_similarity, knn_graph};
pub use mask::{mask_attributes, mask_edges};
pub use normalize::{normalize_adjacency, normalize_pattern, AdjKind, NormalizedAdj};
pub use propagate::{diffuse, diffuse_enhanced, propagate_multiscale, PropagationStack};

/// Ground-truth node class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Normal,
    AttrAnom,
    StructAnom,
    MixedAnom,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Normal => 0,
            Label::AttrAnom => 1,
            Label::StructAnom => 2,
            Label::MixedAnom => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Normal),
            1 => Some(Label::AttrAnom),
            2 => Some(Label::StructAnom),
            3 => Some(Label::MixedAnom),
            _ => None,
        }
    }

    pub fn is_anomaly(self) -> bool {
        self != Label::Normal
    }
}

/// Undirected simple graph stored as sorted neighbor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    neighbors: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Self {
            neighbors: vec![Vec::new(); n],
        }
    }

    /// Symmetrizes, deduplicates and drops self-loops.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); n];
        for (u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::Index { id, n });
                }
            }
            if u != v {
                neighbors[u].push(v);
                neighbors[v].push(u);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { neighbors })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Every undirected edge once, as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, ns)| ns.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for (a, b) in [(i, j), (j, i)] {
            if let Err(pos) = self.neighbors[a].binary_search(&b) {
                self.neighbors[a].insert(pos, b);
            }
        }
    }

    pub fn to_dense<T: Scalar>(&self) -> DenseMatrix<T> {
        let n = self.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, ns) in self.neighbors.iter().enumerate() {
            for &j in ns {
                m[(i, j)] = T::one();
            }
        }
        m
    }

    fn check_symmetric(&self) -> Result<()> {
        for (i, ns) in self.neighbors.iter().enumerate() {
            for &j in ns {
                if j >= self.len() {
                    return Err(Error::Index { id: j, n: self.len() });
                }
                if j == i {
                    return Err(Error::Value(format!("self-loop at node {i}")));
                }
                if !self.has_edge(j, i) {
                    return Err(Error::Value(format!("edge {i}-{j} is not symmetric")));
                }
            }
        }
        Ok(())
    }
}

/// Attributed graph: topology, node attributes and optional anomaly labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph<T> {
    adjacency: Adjacency,
    attributes: DenseMatrix<T>,
    labels: Option<Vec<Label>>,
}

impl<T: Scalar> Graph<T> {
    pub fn new(adjacency: Adjacency, attributes: DenseMatrix<T>, labels: Option<Vec<Label>>) -> Result<Self> {
        if attributes.rows() != adjacency.len() {
            return Err(Error::arg(format!(
                "attribute matrix has {} rows for {} nodes",
                attributes.rows(),
                adjacency.len()
            )));
        }
        attributes.ensure_finite("attribute matrix")?;
        adjacency.check_symmetric()?;
        if let Some(l) = &labels {
            if l.len() != adjacency.len() {
                return Err(Error::arg(format!(
                    "label vector has length {}, expected {}",
                    l.len(),
                    adjacency.len()
                )));
            }
        }
        Ok(Self {
            adjacency,
            attributes,
            labels,
        })
    }

    pub fn from_edges(
        edges: impl IntoIterator<Item = (usize, usize)>,
        attributes: DenseMatrix<T>,
    ) -> Result<Self> {
        let adjacency = Adjacency::from_edges(attributes.rows(), edges)?;
        Self::new(adjacency, attributes, None)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_features(&self) -> usize {
        self.attributes.cols()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.num_edges()
    }

    #[inline]
    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    #[inline]
    pub fn attributes(&self) -> &DenseMatrix<T> {
        &self.attributes
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.adjacency.neighbors(i)
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.degree(i)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.has_edge(i, j)
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::arg(format!(
                "label vector has length {}, expected {}",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    /// Binary anomaly indicator (`true` for any anomaly class).
    pub fn anomaly_flags(&self) -> Option<Vec<bool>> {
        self.labels
            .as_ref()
            .map(|l| l.iter().map(|x| x.is_anomaly()).collect())
    }

    pub(crate) fn into_parts(self) -> (Adjacency, DenseMatrix<T>, Option<Vec<Label>>) {
        (self.adjacency, self.attributes, self.labels)
    }
}
