//! Competing explainers. Each one produces per-edge weights (or per-node
//! Shapley values) that are turned into a subgraph by greedy growth and then
//! scored with the same metrics as the main search.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::enumerate::Enumeration;
use crate::error::{Error, Result};
use crate::explain::{Evaluator, PairingMode};
use crate::gcn::{Aggregator, EdgeMask, Model, Pass};
use crate::graph::{canonical_order, EdgeId, Graph, NodeId, Subgraph};
use crate::rng;

/// Importance per edge id. Edges without an entry are never grown into.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeWeights {
    pub target: NodeId,
    pub weights: BTreeMap<EdgeId, f64>,
}

impl EdgeWeights {
    pub fn new(target: NodeId) -> Self {
        Self {
            target,
            weights: BTreeMap::new(),
        }
    }

    pub fn get(&self, e: EdgeId) -> Option<f64> {
        self.weights.get(&e).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        for (&e, &w) in &self.weights {
            if e >= g.edge_count() {
                return Err(Error::EdgeOutOfRange(e));
            }
            if !w.is_finite() {
                return Err(Error::InvalidConfig(format!("edge {e} has weight {w}")));
            }
        }
        Ok(())
    }
}

/// Edges whose endpoints both lie within `hops` of `v`, ascending id.
pub fn neighborhood_edges(g: &Graph, v: NodeId, hops: usize) -> Vec<EdgeId> {
    let dist = g.hop_distances(v);
    let near = |u: NodeId| matches!(dist[u], Some(d) if d <= hops);
    g.edges()
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| near(a) && near(b))
        .map(|(e, _)| e)
        .collect()
}

/// Uniform `[0, 1)` weight per neighborhood edge, drawn in edge-id order.
pub fn random_weights(g: &Graph, v: NodeId, hops: usize, seed: u64) -> EdgeWeights {
    let mut rng = rng::seeded(seed);
    let weights = neighborhood_edges(g, v, hops)
        .into_iter()
        .map(|e| (e, rng.random::<f64>()))
        .collect();
    EdgeWeights { target: v, weights }
}

/// A greedily grown tree and the trees it passed through.
#[derive(Debug, Clone, PartialEq)]
pub struct GrownSubgraph {
    pub subgraph: Subgraph,
    /// From the single target up to, but excluding, `subgraph`.
    pub chain: Vec<Subgraph>,
}

/// Grows a tree from `v` by repeatedly taking the heaviest weighted frontier
/// edge whose far endpoint is new, until `max_nodes` nodes or no frontier
/// is left. Equal weights fall back to canonical edge rank.
pub fn grow_subgraph(
    weights: &EdgeWeights,
    g: &Graph,
    v: NodeId,
    max_nodes: usize,
) -> GrownSubgraph {
    let rank = canonical_order(g, v).edge_rank;
    let mut in_tree = vec![false; g.node_count()];
    in_tree[v] = true;
    let mut nodes = vec![v];
    let mut edges: Vec<EdgeId> = Vec::new();
    let mut chain = Vec::new();
    let current = |edges: &[EdgeId]| {
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        Subgraph::from_sorted(g, v, sorted)
    };

    while nodes.len() < max_nodes {
        let mut best: Option<(f64, usize, EdgeId, NodeId)> = None;
        for &x in &nodes {
            for &(u, e) in g.incident(x) {
                if in_tree[u] {
                    continue;
                }
                let Some(w) = weights.get(e) else { continue };
                let better = match best {
                    None => true,
                    Some((bw, br, _, _)) => w > bw || (w == bw && rank[e] < br),
                };
                if better {
                    best = Some((w, rank[e], e, u));
                }
            }
        }
        let Some((_, _, e, u)) = best else { break };
        chain.push(current(&edges));
        in_tree[u] = true;
        nodes.push(u);
        edges.push(e);
    }
    GrownSubgraph {
        subgraph: current(&edges),
        chain,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapleyEntry {
    pub sv: f64,
    pub support_count: usize,
}

/// Per-node Shapley values for one target.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShapleyReport {
    pub target: NodeId,
    pub values: BTreeMap<NodeId, ShapleyEntry>,
}

impl ShapleyReport {
    pub fn get(&self, v: NodeId) -> Option<ShapleyEntry> {
        self.values.get(&v).copied()
    }

    /// Nodes by descending value, ascending id on ties.
    pub fn ranking(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.values.keys().copied().collect();
        nodes.sort_by(|a, b| {
            self.values[b]
                .sv
                .partial_cmp(&self.values[a].sv)
                .expect("finite")
                .then(a.cmp(b))
        });
        nodes
    }

    /// Edge weights for growth: an edge takes the value of its endpoint
    /// farther from the target. Edges to unreported nodes are left out.
    pub fn edge_weights(&self, g: &Graph) -> EdgeWeights {
        let dist = g.hop_distances(self.target);
        let weights = g
            .edges()
            .iter()
            .enumerate()
            .filter_map(|(e, &(a, b))| {
                let (da, db) = (dist[a]?, dist[b]?);
                let far = if da >= db { a } else { b };
                self.get(far).map(|s| (e, s.sv))
            })
            .collect();
        EdgeWeights {
            target: self.target,
            weights,
        }
    }
}

/// Averages `nu(S) - nu(S minus j)` over every enumerated tree `S` that
/// holds `j` as a leaf. Trees where removing `j` would disconnect the rest
/// do not count.
pub fn shapley_values(evaluator: &mut Evaluator<'_>, trees: &Enumeration) -> Result<ShapleyReport> {
    let g = evaluator.graph();
    let mut sums: BTreeMap<NodeId, (f64, usize)> = BTreeMap::new();
    for s in trees.subgraphs() {
        for &j in s.nodes() {
            let Some(rest) = s.without_leaf(g, j) else {
                continue;
            };
            let gain = evaluator.nu(s)? - evaluator.nu(&rest)?;
            let entry = sums.entry(j).or_insert((0.0, 0));
            entry.0 += gain;
            entry.1 += 1;
        }
    }
    Ok(ShapleyReport {
        target: trees.target(),
        values: sums
            .into_iter()
            .map(|(j, (sum, n))| {
                (
                    j,
                    ShapleyEntry {
                        sv: sum / n as f64,
                        support_count: n,
                    },
                )
            })
            .collect(),
    })
}

/// Shapley value of an arbitrary removed node set: the mean normalized
/// relevance over every enumerated tree from which removing the set leaves
/// a sub-tree that was also enumerated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetShapley {
    pub delta: Vec<NodeId>,
    pub sv: f64,
    pub support_count: usize,
}

pub fn shapley_set_values(
    evaluator: &mut Evaluator<'_>,
    trees: &Enumeration,
) -> Result<Vec<SetShapley>> {
    let pairs = crate::explain::generate_pairs(trees, PairingMode::Exhaustive);
    let mut sums: BTreeMap<Vec<NodeId>, (f64, usize)> = BTreeMap::new();
    for skeleton in &pairs {
        let pair = evaluator.pair(skeleton)?;
        let entry = sums.entry(pair.delta_nodes).or_insert((0.0, 0));
        entry.0 += pair.mu;
        entry.1 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(delta, (sum, n))| SetShapley {
            delta,
            sv: sum / n as f64,
            support_count: n,
        })
        .collect())
}

/// Magnitude of the loss gradient with respect to the last-layer mask of
/// each edge `(j, v)`:
///
/// `|(theta_y - sum_c P(c) theta_c)^T h_j|`
///
/// with `h_j` the representation of `j` entering the last layer and `y` the
/// predicted class. For two classes with `theta_1 = -theta_0` this is
/// `2 (1 - P(y)) |theta_y^T h_j|`. Edges within `hops` that do not touch `v`
/// get weight 0, which is exact for one-layer models.
pub fn grad_weights_analytic(
    model: &Model,
    g: &Graph,
    v: NodeId,
    hops: usize,
) -> Result<EdgeWeights> {
    let trace = model.forward_pass(g, v, &Pass::default())?;
    let probs = crate::gcn::ClassDistribution::from_logits(&trace.output).probs;
    let y = crate::gcn::ClassDistribution {
        probs: probs.clone(),
    }
    .argmax();
    let theta = model.last_layer();
    // direction = theta_y - E_P[theta_c]
    let direction: Vec<f64> = (0..theta.rows())
        .map(|r| {
            let expected: f64 = (0..theta.cols()).map(|c| probs[c] * theta.get(r, c)).sum();
            theta.get(r, y) - expected
        })
        .collect();
    let scale = match model.stack().aggregator() {
        Aggregator::Sum => 1.0,
        Aggregator::Mean => {
            let messages = g.degree(v) + usize::from(model.stack().self_loop());
            1.0 / messages.max(1) as f64
        }
    };
    let incoming: BTreeMap<NodeId, &Vec<f64>> =
        trace.penultimate.iter().map(|(u, h)| (*u, h)).collect();

    let mut weights = BTreeMap::new();
    for e in neighborhood_edges(g, v, hops) {
        let (a, b) = g.edge(e);
        let w = if a == v || b == v {
            let j = if a == v { b } else { a };
            let h = incoming[&j];
            (scale * direction.iter().zip(h).map(|(d, x)| d * x).sum::<f64>()).abs()
        } else {
            0.0
        };
        weights.insert(e, w);
    }
    Ok(EdgeWeights { target: v, weights })
}

/// One-sided finite difference of the masked loss per neighborhood edge:
/// `|loss(mask_e = 1 - step) - loss(1)| / step`, class fixed to the
/// unmasked prediction.
pub fn grad_weights_fd(
    model: &Model,
    g: &Graph,
    v: NodeId,
    hops: usize,
    step: f64,
) -> Result<EdgeWeights> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step {step} outside (0, 0.5]"
        )));
    }
    let y = model.forward(g, None, None, v)?.argmax();
    let base = model.masked_loss(g, v, y, &EdgeMask::ones())?;
    let mut weights = BTreeMap::new();
    for e in neighborhood_edges(g, v, hops) {
        let mask = EdgeMask::ones().with(e, 1.0 - step)?;
        let loss = model.masked_loss(g, v, y, &mask)?;
        weights.insert(e, (loss - base).abs() / step);
    }
    Ok(EdgeWeights { target: v, weights })
}

/// Nodes a grown subgraph reaches, for reporting.
pub fn grown_nodes(grown: &GrownSubgraph) -> BTreeSet<NodeId> {
    grown.subgraph.node_set()
}
