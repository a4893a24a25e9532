//! Enumeration of the tree-shaped subgraphs around a target node.
//!
//! Starting from the single target node, the search repeatedly adds one
//! frontier edge (an edge with exactly one endpoint in the current tree).
//! Frontier edges are tried in canonical BFS rank; once every tree
//! containing an edge has been produced, the edge is forbidden for the
//! remaining siblings and their descendants. Each tree containing the target
//! is therefore produced exactly once, and each one remembers the tree it
//! was grown from.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{canonical_order, EdgeId, Graph, NodeId, Subgraph};

/// Search limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    /// Largest explanation, in nodes.
    pub max_nodes: usize,
    /// Nodes farther than this many hops from the target are never added.
    pub diameter: usize,
    /// Share of the ranked pairs reported, in `(0, 100]`.
    pub top_percent: f64,
}

impl EnumConfig {
    pub fn new(max_nodes: usize, diameter: usize, top_percent: f64) -> Result<Self> {
        let cfg = Self {
            max_nodes,
            diameter,
            top_percent,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_nodes < 1 {
            return Err(Error::InvalidConfig("max_nodes must be at least 1".into()));
        }
        if self.diameter < 1 {
            return Err(Error::InvalidConfig("diameter must be at least 1".into()));
        }
        if !(self.top_percent > 0.0 && self.top_percent <= 100.0) {
            return Err(Error::InvalidConfig(format!(
                "top_percent {} outside (0, 100]",
                self.top_percent
            )));
        }
        Ok(())
    }
}

impl Default for EnumConfig {
    fn default() -> Self {
        Self {
            max_nodes: 4,
            diameter: 2,
            top_percent: 10.0,
        }
    }
}

/// Output of [`enumerate_subgraphs`], in DFS pre-order.
#[derive(Debug, Clone)]
pub struct Enumeration {
    target: NodeId,
    subgraphs: Vec<Subgraph>,
    parents: Vec<Option<usize>>,
    index: HashMap<Vec<EdgeId>, usize>,
}

impl Enumeration {
    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn subgraphs(&self) -> &[Subgraph] {
        &self.subgraphs
    }

    pub fn get(&self, i: usize) -> &Subgraph {
        &self.subgraphs[i]
    }

    pub fn len(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgraphs.is_empty()
    }

    /// Index of the tree this one was grown from; `None` for the root.
    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parents[i]
    }

    /// Proper ancestors, nearest first, ending with the root.
    pub fn ancestors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.parents[i], move |&p| self.parents[p])
    }

    /// Looks a tree up by its sorted edge ids.
    pub fn position(&self, edges: &[EdgeId]) -> Option<usize> {
        self.index.get(edges).copied()
    }
}

struct Search<'g> {
    graph: &'g Graph,
    edge_rank: Vec<usize>,
    dist: Vec<Option<usize>>,
    cfg: EnumConfig,
    in_tree: Vec<bool>,
    tree_nodes: Vec<NodeId>,
    tree_edges: Vec<EdgeId>,
    forbidden: Vec<bool>,
    out: Enumeration,
}

impl Search<'_> {
    fn record(&mut self, parent: Option<usize>) -> usize {
        let mut edges = self.tree_edges.clone();
        edges.sort_unstable();
        let i = self.out.subgraphs.len();
        self.out.index.insert(edges.clone(), i);
        self.out
            .subgraphs
            .push(Subgraph::from_sorted(self.graph, self.out.target, edges));
        self.out.parents.push(parent);
        i
    }

    fn extend(&mut self, current: usize) {
        if self.tree_nodes.len() >= self.cfg.max_nodes {
            return;
        }
        let mut frontier: Vec<(EdgeId, NodeId)> = Vec::new();
        for &x in &self.tree_nodes {
            for &(u, e) in self.graph.incident(x) {
                let close = matches!(self.dist[u], Some(d) if d <= self.cfg.diameter);
                if close && !self.in_tree[u] && !self.forbidden[e] {
                    frontier.push((e, u));
                }
            }
        }
        frontier.sort_unstable_by_key(|&(e, _)| self.edge_rank[e]);

        for &(e, u) in &frontier {
            self.in_tree[u] = true;
            self.tree_nodes.push(u);
            self.tree_edges.push(e);
            let child = self.record(Some(current));
            self.extend(child);
            self.tree_edges.pop();
            self.tree_nodes.pop();
            self.in_tree[u] = false;
            self.forbidden[e] = true;
        }
        for &(e, _) in &frontier {
            self.forbidden[e] = false;
        }
    }
}

/// Every connected acyclic edge-induced subgraph containing `v` with at most
/// `max_nodes` nodes, all within `diameter` hops of `v`, each exactly once.
pub fn enumerate_subgraphs(g: &Graph, v: NodeId, cfg: &EnumConfig) -> Result<Enumeration> {
    if !g.contains_node(v) {
        return Err(Error::NodeOutOfRange {
            id: v,
            count: g.node_count(),
        });
    }
    let mut in_tree = vec![false; g.node_count()];
    in_tree[v] = true;
    let mut search = Search {
        graph: g,
        edge_rank: canonical_order(g, v).edge_rank,
        dist: g.hop_distances(v),
        cfg: *cfg,
        in_tree,
        tree_nodes: vec![v],
        tree_edges: Vec::new(),
        forbidden: vec![false; g.edge_count()],
        out: Enumeration {
            target: v,
            subgraphs: Vec::new(),
            parents: Vec::new(),
            index: HashMap::new(),
        },
    };
    let root = search.record(None);
    search.extend(root);
    Ok(search.out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::graph::{build_graph, validate_subgraph, NodeInput};

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        build_graph((0..n).map(|_| NodeInput::new(vec![1.0])).collect(), edges).unwrap()
    }

    /// All edge subsets of size < C that form a tree with the target inside
    /// the hop limit.
    fn brute_force(g: &Graph, v: NodeId, c: usize, d: usize) -> BTreeSet<Vec<EdgeId>> {
        let dist = g.hop_distances(v);
        let m = g.edge_count();
        let mut found = BTreeSet::new();
        for bits in 0u64..(1u64 << m) {
            if bits.count_ones() as usize >= c {
                continue;
            }
            let edges: Vec<EdgeId> = (0..m).filter(|&e| bits >> e & 1 == 1).collect();
            let s = Subgraph::new(g, v, edges.clone()).unwrap();
            let near = s
                .nodes()
                .iter()
                .all(|&u| matches!(dist[u], Some(x) if x <= d));
            if near && validate_subgraph(g, &s).is_ok() {
                found.insert(edges);
            }
        }
        found
    }

    fn keys(e: &Enumeration) -> Vec<Vec<EdgeId>> {
        e.subgraphs().iter().map(|s| s.edges().to_vec()).collect()
    }

    fn cfg(c: usize, d: usize) -> EnumConfig {
        EnumConfig::new(c, d, 100.0).unwrap()
    }

    #[test]
    fn chain() {
        // b=2 - a=1 - i=0
        let g = graph(3, &[(2, 1), (1, 0)]);
        let e = enumerate_subgraphs(&g, 0, &cfg(3, 2)).unwrap();
        let nodes: Vec<Vec<NodeId>> = e.subgraphs().iter().map(|s| s.nodes().to_vec()).collect();
        assert_eq!(nodes, vec![vec![0], vec![0, 1], vec![0, 1, 2]]);
        assert_eq!(e.parent(0), None);
        assert_eq!(e.parent(1), Some(0));
        assert_eq!(e.parent(2), Some(1));
        assert_eq!(e.ancestors(2).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn star() {
        let g = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        let e = enumerate_subgraphs(&g, 0, &cfg(3, 1)).unwrap();
        assert_eq!(e.len(), 7);
        let set: BTreeSet<_> = keys(&e).into_iter().collect();
        assert_eq!(set, brute_force(&g, 0, 3, 1));
    }

    #[test]
    fn triangle_excludes_cycle() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let e = enumerate_subgraphs(&g, 0, &cfg(3, 2)).unwrap();
        assert_eq!(e.len(), 6);
        assert!(e.subgraphs().iter().all(|s| s.edges().len() < 3));
        let set: BTreeSet<_> = keys(&e).into_iter().collect();
        assert_eq!(set, brute_force(&g, 0, 3, 2));
    }

    #[test]
    fn isolated_target() {
        let g = graph(2, &[]);
        let e = enumerate_subgraphs(&g, 1, &cfg(4, 2)).unwrap();
        assert_eq!(keys(&e), vec![Vec::<EdgeId>::new()]);
    }

    #[test]
    fn parents_differ_by_one_edge() {
        let g = graph(6, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (4, 5), (3, 5)]);
        let e = enumerate_subgraphs(&g, 0, &cfg(5, 3)).unwrap();
        for i in 1..e.len() {
            let p = e.get(e.parent(i).unwrap());
            assert!(p.is_strict_subtree_of(e.get(i)));
            assert_eq!(p.edges().len() + 1, e.get(i).edges().len());
        }
    }

    #[test]
    fn config_validation() {
        assert!(EnumConfig::new(0, 1, 10.0).is_err());
        assert!(EnumConfig::new(1, 0, 10.0).is_err());
        assert!(EnumConfig::new(1, 1, 0.0).is_err());
        assert!(EnumConfig::new(1, 1, 100.5).is_err());
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force(
            n in 1usize..8,
            bits in proptest::collection::vec(proptest::bool::weighted(0.4), 28),
            c in 1usize..6,
            d in 1usize..4,
            target in 0usize..8,
        ) {
            let mut edges = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if bits[k] { edges.push((a, b)); }
                    k += 1;
                }
            }
            let g = graph(n, &edges);
            let v = target % n;
            let e = enumerate_subgraphs(&g, v, &cfg(c, d)).unwrap();
            let listed = keys(&e);
            let set: BTreeSet<_> = listed.iter().cloned().collect();
            proptest::prop_assert_eq!(set.len(), listed.len());
            proptest::prop_assert_eq!(set, brute_force(&g, v, c, d));
        }
    }
}
