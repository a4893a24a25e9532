//! Serialized form of one node's explanation.

use serde::{Deserialize, Serialize};

use moexp_core::baselines::{EdgeWeights, ShapleyReport};
use moexp_core::explain::ExplanationPair;
use moexp_core::graph::{Graph, NodeId, Subgraph};
use moexp_core::NodeExplanation;

use crate::manifest::Manifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<[NodeId; 2]>,
}

impl TreeDoc {
    pub fn new(g: &Graph, s: &Subgraph) -> Self {
        Self {
            nodes: s.nodes().to_vec(),
            edges: s
                .edges()
                .iter()
                .map(|&e| {
                    let (a, b) = g.edge(e);
                    [a, b]
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDoc {
    pub explanation: TreeDoc,
    pub counterfactual: TreeDoc,
    pub delta: Vec<NodeId>,
    pub nu: f64,
    pub nu_counterfactual: f64,
    pub mu: f64,
    pub r1: usize,
    pub r2: usize,
    pub rank_sum: usize,
    pub pareto: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightDoc {
    pub edge: [NodeId; 2],
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyDoc {
    pub node: NodeId,
    pub sv: f64,
    pub support_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDoc {
    pub method: String,
    pub predicted_class: usize,
    pub distribution: Vec<f64>,
    pub subgraphs_considered: usize,
    pub pairs_scored: usize,
    pub front_size: usize,
    /// The chosen tree; for weight-based methods the grown tree.
    pub explanation: TreeDoc,
    pub selected: Option<PairDoc>,
    pub confounders: Option<Vec<NodeId>>,
    /// Top pairs by rank sum.
    pub top_pairs: Vec<PairDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_weights: Option<Vec<WeightDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapley: Option<Vec<ShapleyDoc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub node: NodeId,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ExplanationDoc>,
    /// Last, so the timestamp closes the document.
    pub manifest: Manifest,
}

fn pair_doc(g: &Graph, out: &NodeExplanation, i: usize) -> PairDoc {
    let p: &ExplanationPair = &out.front.pairs[i];
    PairDoc {
        explanation: TreeDoc::new(g, &p.explanation.subgraph),
        counterfactual: TreeDoc::new(g, &p.counterfactual.subgraph),
        delta: p.delta_nodes.clone(),
        nu: p.explanation.nu,
        nu_counterfactual: p.counterfactual.nu,
        mu: p.mu,
        r1: out.front.r1[i],
        r2: out.front.r2[i],
        rank_sum: out.front.rank_sum[i],
        pareto: out.front.pareto_flags[i],
    }
}

fn weight_docs(g: &Graph, w: &EdgeWeights) -> Vec<WeightDoc> {
    w.weights
        .iter()
        .map(|(&e, &weight)| {
            let (a, b) = g.edge(e);
            WeightDoc {
                edge: [a, b],
                weight,
            }
        })
        .collect()
}

fn shapley_docs(r: &ShapleyReport) -> Vec<ShapleyDoc> {
    r.values
        .iter()
        .map(|(&node, e)| ShapleyDoc {
            node,
            sv: e.sv,
            support_count: e.support_count,
        })
        .collect()
}

impl ExplanationDoc {
    pub fn new(g: &Graph, out: &NodeExplanation, top_percent: f64) -> Self {
        Self {
            method: out.method.to_string(),
            predicted_class: out.predicted_class,
            distribution: out.full_distribution.probs.clone(),
            subgraphs_considered: out.subgraph_count,
            pairs_scored: out.front.pairs.len(),
            front_size: out.front.front_size(),
            explanation: TreeDoc::new(g, &out.explanation),
            selected: out.front.selected.map(|i| pair_doc(g, out, i)),
            confounders: out
                .confounders
                .as_ref()
                .map(|c| c.iter().copied().collect()),
            top_pairs: out
                .front
                .top_percent(top_percent)
                .into_iter()
                .map(|i| pair_doc(g, out, i))
                .collect(),
            edge_weights: out.weights.as_ref().map(|w| weight_docs(g, w)),
            shapley: out.shapley.as_ref().map(shapley_docs),
        }
    }
}
