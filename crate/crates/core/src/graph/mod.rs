//! Undirected resource graph and clustering coefficients.
//!
//! Subjects and non-literal objects become vertices; each triple contributes
//! one undirected edge. Parallel edges collapse and self-loops are dropped.
//! [`ResourceGraph`] is the growable form fed by the stream; [`CompactGraph`]
//! is the frozen, sorted adjacency used by the exact computation and the
//! random walker.

mod walk;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::ntriples::{Term, Triple};

pub use walk::{
    estimate_cc, estimate_cc_raw, mixing_time, random_walk, WalkAccumulators, WalkConfig,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("graph has no vertices")]
    Empty,
    #[error("graph has no edges")]
    NoEdges,
    #[error("walk of {0} steps is too short; at least 3 are needed")]
    DegenerateWalk(usize),
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
}

pub type VertexId = u32;

#[derive(Debug, Default, Clone)]
pub struct ResourceGraph {
    index: HashMap<String, VertexId>,
    labels: Vec<String>,
    adjacency: Vec<HashSet<VertexId>>,
    edges: usize,
}

impl ResourceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the subject–object edge of `t`. Literal objects and self-loops
    /// leave the graph unchanged.
    pub fn add_triple_edge(&mut self, t: &Triple) {
        if t.object.is_literal() || t.subject.is_literal() || t.subject == t.object {
            return;
        }
        let a = self.intern(&t.subject);
        let b = self.intern(&t.object);
        self.link(a, b);
    }

    /// Adds an edge between two vertices named by arbitrary labels.
    pub fn add_edge(&mut self, a: &str, b: &str) {
        if a == b {
            return;
        }
        let a = self.intern_label(a);
        let b = self.intern_label(b);
        self.link(a, b);
    }

    fn link(&mut self, a: VertexId, b: VertexId) {
        if self.adjacency[a as usize].insert(b) {
            self.adjacency[b as usize].insert(a);
            self.edges += 1;
        }
    }

    fn intern(&mut self, term: &Term) -> VertexId {
        let mut key = String::new();
        term.write_ntriples(&mut key);
        self.intern_owned(key)
    }

    fn intern_label(&mut self, label: &str) -> VertexId {
        match self.index.get(label) {
            Some(&id) => id,
            None => self.intern_owned(label.to_owned()),
        }
    }

    fn intern_owned(&mut self, key: String) -> VertexId {
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.labels.len() as VertexId;
        self.labels.push(key.clone());
        self.index.insert(key, id);
        self.adjacency.push(HashSet::new());
        id
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    /// Vertex id for a label (the N-Triples form of the term for vertices
    /// created from triples).
    pub fn vertex(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.labels[v as usize]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn are_adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.adjacency[a as usize].contains(&b)
    }

    /// Freezes the adjacency into sorted CSR form.
    pub fn compact(&self) -> CompactGraph {
        let mut offsets = Vec::with_capacity(self.labels.len() + 1);
        let mut targets = Vec::with_capacity(self.edges * 2);
        offsets.push(0);
        for neighbours in &self.adjacency {
            let start = targets.len();
            targets.extend(neighbours.iter().copied());
            targets[start..].sort_unstable();
            offsets.push(targets.len());
        }
        CompactGraph { offsets, targets }
    }
}

/// Immutable undirected graph with sorted neighbour lists.
#[derive(Debug, Clone)]
pub struct CompactGraph {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
}

impl CompactGraph {
    /// Builds directly from an edge list over vertices `0..vertex_count`.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Self {
        let mut g = ResourceGraph::new();
        for v in 0..vertex_count {
            g.intern_owned(v.to_string());
        }
        for (a, b) in edges {
            if a != b {
                g.link(a, b);
            }
        }
        g.compact()
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbours(&self, v: VertexId) -> &[VertexId] {
        &self.targets[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    #[inline]
    pub fn are_adjacent(&self, a: VertexId, b: VertexId) -> bool {
        self.neighbours(a).binary_search(&b).is_ok()
    }

    fn check(&self, v: VertexId) -> Result<(), GraphError> {
        if (v as usize) < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex(v.to_string()))
        }
    }

    /// Fraction of neighbour pairs of `v` that are themselves adjacent;
    /// 0 when `v` has fewer than two neighbours.
    pub fn local_cc(&self, v: VertexId) -> Result<f64, GraphError> {
        self.check(v)?;
        let nv = self.neighbours(v);
        let d = nv.len();
        if d < 2 {
            return Ok(0.0);
        }
        let links: usize = nv
            .iter()
            .map(|&u| sorted_intersection(nv, self.neighbours(u)))
            .sum();
        let pairs = d * (d - 1) / 2;
        Ok((links / 2) as f64 / pairs as f64)
    }

    /// Triangles through each vertex, by degree-ordered enumeration: every
    /// edge is oriented towards the endpoint of higher (degree, id) rank so
    /// each triangle is found exactly once.
    pub fn triangles_per_vertex(&self) -> Vec<u64> {
        let n = self.vertex_count();
        let rank_key = |v: VertexId| (self.degree(v), v);
        let forward: Vec<Vec<VertexId>> = (0..n as VertexId)
            .map(|v| {
                self.neighbours(v)
                    .iter()
                    .copied()
                    .filter(|&u| rank_key(u) > rank_key(v))
                    .collect()
            })
            .collect();
        let mut tri = vec![0u64; n];
        for v in 0..n {
            for &u in &forward[v] {
                let (a, b) = (&forward[v], &forward[u as usize]);
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            tri[v] += 1;
                            tri[u as usize] += 1;
                            tri[a[i] as usize] += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
        }
        tri
    }

    /// Local coefficient of every vertex.
    pub fn local_ccs(&self) -> Vec<f64> {
        self.triangles_per_vertex()
            .into_iter()
            .enumerate()
            .map(|(v, t)| {
                let d = self.degree(v as VertexId) as u64;
                if d < 2 {
                    0.0
                } else {
                    t as f64 / (d * (d - 1) / 2) as f64
                }
            })
            .collect()
    }

    /// Network-average clustering coefficient: mean of the local values.
    pub fn global_cc(&self) -> Result<f64, GraphError> {
        let n = self.vertex_count();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        Ok(self.local_ccs().iter().sum::<f64>() / n as f64)
    }
}

fn sorted_intersection(a: &[VertexId], b: &[VertexId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
