use std::collections::{HashMap, VecDeque};

use super::Adjacency;

/// Hop distances from one source, truncated at `cap`. Nodes farther away
/// (or unreachable) are absent from the map.
pub fn bfs_capped(adj: &Adjacency, source: usize, cap: usize) -> HashMap<usize, usize> {
    let mut dist = HashMap::new();
    dist.insert(source, 0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du == cap {
            continue;
        }
        for &v in adj.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

#[derive(Clone, Debug)]
pub struct HopDistances {
    cap: usize,
    from: HashMap<usize, HashMap<usize, usize>>,
}

impl HopDistances {
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Distance from a source to `b`; `cap + 1` when farther than `cap`.
    /// Panics if `a` was not one of the sources.
    pub fn get(&self, a: usize, b: usize) -> usize {
        let row = self.from.get(&a).expect("distance queried from a non-source node");
        row.get(&b).copied().unwrap_or(self.cap + 1)
    }

    pub fn within(&self, a: usize) -> Option<&HashMap<usize, usize>> {
        self.from.get(&a)
    }
}

pub fn hop_distances(adj: &Adjacency, sources: &[usize], cap: usize) -> HopDistances {
    let cap = cap.max(1);
    let from = sources
        .iter()
        .map(|&s| (s, bfs_capped(adj, s, cap)))
        .collect();
    HopDistances { cap, from }
}
