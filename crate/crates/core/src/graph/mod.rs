//! Undirected, unweighted server graphs.
//!
//! A [`Graph`] is immutable once built. Hop distance (shortest-path length)
//! is the only notion of distance used by the policies, including on the
//! spatially embedded topologies.

mod edgelist;
mod topology;

use std::collections::VecDeque;

pub use edgelist::{read_edge_list, write_edge_list};
pub use topology::TopologySpec;

use crate::batch;
use crate::error::{Error, Result};

/// Marker for "not reached" in full BFS distance rows.
pub const UNREACHABLE: u32 = u32::MAX;

/// Vertex coordinates for the spatial topologies.
#[derive(Debug, Clone, PartialEq)]
pub enum Embedding {
    /// Position on a segment, in length units.
    Line(Vec<f64>),
    /// Angle in radians on a circle of the given radius.
    Circle { radius: f64, angles: Vec<f64> },
    /// Point in the unit square.
    Plane(Vec<[f64; 2]>),
}

impl Embedding {
    pub fn len(&self) -> usize {
        match self {
            Embedding::Line(p) => p.len(),
            Embedding::Circle { angles, .. } => angles.len(),
            Embedding::Plane(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    embedding: Option<Embedding>,
    topology: Option<TopologySpec>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Self-loops, duplicate
    /// edges and out-of-range ids are rejected. Connectivity is not required.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("graph needs at least one vertex".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidSpec(format!("edge ({u}, {v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::InvalidSpec(format!("self-loop at {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if nbrs.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidSpec(format!("duplicate edge at vertex {u}")));
            }
        }
        Ok(Self {
            adjacency,
            embedding: None,
            topology: None,
        })
    }

    /// The one-server system (no edges); used for the M/M/1 degenerate case.
    pub fn singleton() -> Self {
        Self {
            adjacency: vec![Vec::new()],
            embedding: None,
            topology: None,
        }
    }

    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n)
            .map(|u| (0..n).filter(|&v| v != u).collect())
            .collect();
        Self {
            adjacency,
            embedding: None,
            topology: None,
        }
    }

    pub fn with_embedding(mut self, embedding: Embedding) -> Result<Self> {
        if embedding.len() != self.n() {
            return Err(Error::InvalidSpec(format!(
                "embedding has {} coordinates for {} vertices",
                embedding.len(),
                self.n()
            )));
        }
        self.embedding = Some(embedding);
        Ok(self)
    }

    pub(crate) fn with_topology(mut self, spec: TopologySpec) -> Self {
        self.topology = Some(spec);
        self
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    /// Generator (with parameters) that produced this graph, if any.
    pub fn topology(&self) -> Option<&TopologySpec> {
        self.topology.as_ref()
    }

    /// `2|E| / (n(n-1))`.
    pub fn density(&self) -> f64 {
        let n = self.n() as f64;
        if self.n() < 2 {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / (n * (n - 1.0))
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(|&d| d != UNREACHABLE)
    }

    /// Full BFS distance row from `origin`; unreachable vertices hold
    /// [`UNREACHABLE`].
    pub fn bfs(&self, origin: usize) -> Vec<u32> {
        let mut dist = vec![UNREACHABLE; self.n()];
        let mut queue = VecDeque::new();
        dist[origin] = 0;
        queue.push_back(origin);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in &self.adjacency[u] {
                if dist[v] == UNREACHABLE {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Vertices within `k` hops of `origin`, excluding `origin` itself.
    pub fn distances_up_to_k(&self, origin: usize, k: u32) -> DistanceField {
        assert!(origin < self.n(), "vertex {origin} out of range");
        assert!(k >= 1, "hop radius must be at least 1");
        let mut seen = vec![false; self.n()];
        seen[origin] = true;
        let mut entries = Vec::new();
        let mut frontier = vec![origin];
        let mut depth = 0;
        while depth < k && !frontier.is_empty() {
            depth += 1;
            let mut layer = Vec::new();
            for &u in &frontier {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        layer.push(v);
                    }
                }
            }
            layer.sort_unstable();
            entries.extend(layer.iter().map(|&v| (v, depth)));
            frontier = layer;
        }
        DistanceField { origin, k, entries }
    }

    /// Mean hop distance over ordered pairs of distinct vertices.
    pub fn average_path_length(&self) -> Result<f64> {
        let n = self.n();
        if n < 2 {
            return Ok(0.0);
        }
        let sums = batch::par_map((0..n).collect(), |u| {
            let row = self.bfs(u);
            if row.contains(&UNREACHABLE) {
                None
            } else {
                Some(row.iter().map(|&d| d as u64).sum::<u64>())
            }
        });
        let mut total = 0u64;
        for s in sums {
            total += s.ok_or(Error::Disconnected)?;
        }
        Ok(total as f64 / (n as f64 * (n as f64 - 1.0)))
    }

    /// Largest eccentricity.
    pub fn diameter(&self) -> Result<u32> {
        let eccs = batch::par_map((0..self.n()).collect(), |u| {
            self.bfs(u).into_iter().max().unwrap_or(0)
        });
        let d = eccs.into_iter().max().unwrap_or(0);
        if d == UNREACHABLE {
            Err(Error::Disconnected)
        } else {
            Ok(d)
        }
    }

    /// Hop distance for each `(u, v)` pair. Runs one BFS per distinct
    /// origin, so it stays O(n) in memory on large graphs.
    pub fn hop_distances(&self, pairs: &[(usize, usize)]) -> Vec<u32> {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_unstable_by_key(|&i| pairs[i].0);
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for i in order {
            let u = pairs[i].0;
            match groups.last_mut() {
                Some((g, idx)) if *g == u => idx.push(i),
                _ => groups.push((u, vec![i])),
            }
        }
        let answered = batch::par_map(groups, |(u, idx)| {
            let row = self.bfs(u);
            idx.into_iter()
                .map(|i| (i, row[pairs[i].1]))
                .collect::<Vec<_>>()
        });
        let mut out = vec![UNREACHABLE; pairs.len()];
        for (i, d) in answered.into_iter().flatten() {
            out[i] = d;
        }
        out
    }
}

/// Truncated BFS result: every vertex at hop distance `1..=k` from `origin`,
/// ordered by (distance, vertex id).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub origin: usize,
    pub k: u32,
    pub entries: Vec<(usize, u32)>,
}

impl DistanceField {
    /// Hop distance of `v`, `Some(0)` for the origin, `None` beyond `k`.
    pub fn get(&self, v: usize) -> Option<u32> {
        if v == self.origin {
            return Some(0);
        }
        self.entries.iter().find(|e| e.0 == v).map(|e| e.1)
    }

    /// `|N_k(origin)|`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}
