//! Undirected attributed graphs with canonical node and edge numbering.
//!
//! Edge ids are positions in the list of `(min, max)` endpoint pairs sorted
//! ascending, so two graphs built from the same edge multiset carry the same
//! ids regardless of input order. Neighbor lists are sorted by node id.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Per-node input to [`build_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInput {
    pub features: Vec<f64>,
    pub label: Option<usize>,
}

impl NodeInput {
    pub fn new(features: Vec<f64>) -> Self {
        Self {
            features,
            label: None,
        }
    }

    pub fn labeled(features: Vec<f64>, label: usize) -> Self {
        Self {
            features,
            label: Some(label),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    features: Vec<Vec<f64>>,
    labels: Vec<Option<usize>>,
    edges: Vec<(NodeId, NodeId)>,
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

/// Builds a canonical graph. Edges are unordered pairs; `[0,1]` and `[1,0]`
/// are the same edge and listing both is a duplicate.
pub fn build_graph(nodes: Vec<NodeInput>, edges: &[(NodeId, NodeId)]) -> Result<Graph> {
    let count = nodes.len();
    let dim = nodes.first().map_or(0, |n| n.features.len());
    let mut features = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for (id, node) in nodes.into_iter().enumerate() {
        if node.features.len() != dim {
            return Err(Error::FeatureLengthMismatch {
                node: id,
                expected: dim,
                found: node.features.len(),
            });
        }
        features.push(node.features);
        labels.push(node.label);
    }

    let mut canonical = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        for id in [a, b] {
            if id >= count {
                return Err(Error::NodeOutOfRange { id, count });
            }
        }
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        canonical.push((a.min(b), a.max(b)));
    }
    canonical.sort_unstable();
    if let Some(w) = canonical.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateEdge(w[0].0, w[0].1));
    }

    let mut adjacency = vec![Vec::new(); count];
    for (id, &(a, b)) in canonical.iter().enumerate() {
        adjacency[a].push((b, id));
        adjacency[b].push((a, id));
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    Ok(Graph {
        features,
        labels,
        edges: canonical,
        adjacency,
    })
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.features.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Feature dimension shared by every node (0 for an empty graph).
    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn features(&self, v: NodeId) -> &[f64] {
        &self.features[v]
    }

    pub fn label(&self, v: NodeId) -> Option<usize> {
        self.labels[v]
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> (NodeId, NodeId) {
        self.edges[e]
    }

    pub fn contains_node(&self, v: NodeId) -> bool {
        v < self.node_count()
    }

    /// `(neighbor, edge id)` pairs sorted by neighbor id.
    pub fn incident(&self, v: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn neighbors(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[v].iter().map(|&(u, _)| u)
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn find_edge(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        let list = self.adjacency.get(a)?;
        list.binary_search_by_key(&b, |&(u, _)| u)
            .ok()
            .map(|i| list[i].1)
    }

    /// The node ids and input-order independent description needed to
    /// rebuild this graph.
    pub fn node_inputs(&self) -> Vec<NodeInput> {
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(f, &label)| NodeInput {
                features: f.clone(),
                label,
            })
            .collect()
    }

    /// Shortest-path hop counts from `v`; `None` for unreachable nodes.
    pub fn hop_distances(&self, v: NodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        dist[v] = Some(0);
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            let next = dist[x].unwrap() + 1;
            for u in self.neighbors(x) {
                if dist[u].is_none() {
                    dist[u] = Some(next);
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Nodes `u` with `dist(v, u) <= radius`, including `v`, in ascending id.
    pub fn ball(&self, v: NodeId, radius: usize) -> Vec<NodeId> {
        self.hop_distances(v)
            .iter()
            .enumerate()
            .filter(|(_, d)| matches!(d, Some(d) if *d <= radius))
            .map(|(u, _)| u)
            .collect()
    }
}

/// All nodes at hop distance `1..=hops` from `v`.
pub fn l_hop_neighborhood(g: &Graph, v: NodeId, hops: usize) -> BTreeSet<NodeId> {
    g.hop_distances(v)
        .iter()
        .enumerate()
        .filter(|(_, d)| matches!(d, Some(d) if (1..=hops).contains(d)))
        .map(|(u, _)| u)
        .collect()
}

/// BFS numbering rooted at a target node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalOrder {
    pub target: NodeId,
    /// Rank of each node id.
    pub node_rank: Vec<usize>,
    /// Node ids listed by rank.
    pub order: Vec<NodeId>,
    /// Rank of each edge id.
    pub edge_rank: Vec<usize>,
}

/// Ranks nodes by BFS discovery from `target` (same-depth ties by id, since
/// neighbor lists are id-sorted), then unreachable nodes by id. Edges are
/// ranked by `(min endpoint rank, max endpoint rank)`.
pub fn canonical_order(g: &Graph, target: NodeId) -> CanonicalOrder {
    let n = g.node_count();
    let dist = g.hop_distances(target);
    let mut order: Vec<NodeId> = (0..n).filter(|&u| dist[u].is_some()).collect();
    order.sort_by_key(|&u| (dist[u], u));
    order.extend((0..n).filter(|&u| dist[u].is_none()));

    let mut node_rank = vec![0; n];
    for (rank, &u) in order.iter().enumerate() {
        node_rank[u] = rank;
    }

    let mut by_rank: Vec<(usize, usize, EdgeId)> = g
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(a, b))| {
            let (ra, rb) = (node_rank[a], node_rank[b]);
            (ra.min(rb), ra.max(rb), e)
        })
        .collect();
    by_rank.sort_unstable();
    let mut edge_rank = vec![0; g.edge_count()];
    for (rank, &(_, _, e)) in by_rank.iter().enumerate() {
        edge_rank[e] = rank;
    }

    CanonicalOrder {
        target,
        node_rank,
        order,
        edge_rank,
    }
}

/// Edge-induced subgraph anchored at a target node.
///
/// Identity is the target plus the sorted edge-id list; `nodes` is derived.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subgraph {
    target: NodeId,
    edges: Vec<EdgeId>,
    nodes: Vec<NodeId>,
}

impl Subgraph {
    pub fn single(target: NodeId) -> Self {
        Self {
            target,
            edges: Vec::new(),
            nodes: vec![target],
        }
    }

    pub fn new(g: &Graph, target: NodeId, mut edges: Vec<EdgeId>) -> Result<Self> {
        if !g.contains_node(target) {
            return Err(Error::NodeOutOfRange {
                id: target,
                count: g.node_count(),
            });
        }
        if let Some(&bad) = edges.iter().find(|&&e| e >= g.edge_count()) {
            return Err(Error::EdgeOutOfRange(bad));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted(g, target, edges))
    }

    /// `edges` must be sorted, deduplicated and valid for `g`.
    pub(crate) fn from_sorted(g: &Graph, target: NodeId, edges: Vec<EdgeId>) -> Self {
        let mut nodes: Vec<NodeId> = edges
            .iter()
            .flat_map(|&e| {
                let (a, b) = g.edge(e);
                [a, b]
            })
            .chain(std::iter::once(target))
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        Self {
            target,
            edges,
            nodes,
        }
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains_node(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    pub fn node_set(&self) -> BTreeSet<NodeId> {
        self.nodes.iter().copied().collect()
    }

    /// True when every edge of `self` is in `other` and `other` has more.
    pub fn is_strict_subtree_of(&self, other: &Subgraph) -> bool {
        self.target == other.target
            && self.edges.len() < other.edges.len()
            && self.edges.iter().all(|&e| other.contains_edge(e))
    }

    /// Removes node `v` and its incident edges. Returns `None` when `v` is
    /// the target, absent, or not a leaf (removal would disconnect a tree).
    pub fn without_leaf(&self, g: &Graph, v: NodeId) -> Option<Subgraph> {
        if v == self.target || !self.contains_node(v) {
            return None;
        }
        let incident: Vec<EdgeId> = self
            .edges
            .iter()
            .copied()
            .filter(|&e| {
                let (a, b) = g.edge(e);
                a == v || b == v
            })
            .collect();
        if incident.len() != 1 {
            return None;
        }
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|&e| e != incident[0])
            .collect();
        Some(Subgraph::from_sorted(g, self.target, edges))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    Disconnected,
    Cyclic,
    MissingTarget,
}

/// Checks that `s` is a tree containing its target. The size bound is the
/// caller's business.
pub fn validate_subgraph(g: &Graph, s: &Subgraph) -> Result<(), Violation> {
    if !s.edges.is_empty()
        && !s.edges.iter().any(|&e| {
            let (a, b) = g.edge(e);
            a == s.target || b == s.target
        })
    {
        return Err(Violation::MissingTarget);
    }

    let index = |v: NodeId| s.nodes.binary_search(&v).unwrap();
    let mut parent: Vec<usize> = (0..s.nodes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &e in &s.edges {
        let (a, b) = g.edge(e);
        let (ra, rb) = (find(&mut parent, index(a)), find(&mut parent, index(b)));
        if ra == rb {
            return Err(Violation::Cyclic);
        }
        parent[ra] = rb;
    }
    let root = find(&mut parent, index(s.target));
    if (0..s.nodes.len()).any(|i| find(&mut parent, i) != root) {
        return Err(Violation::Disconnected);
    }
    Ok(())
}
