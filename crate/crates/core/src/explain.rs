//! Counterfactual pairing and memoized scoring of explanation pairs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::enumerate::Enumeration;
use crate::error::{Error, Result};
use crate::gcn::{ClassDistribution, Model, Pass};
use crate::graph::{validate_subgraph, EdgeId, Graph, NodeId, Subgraph};
use crate::metrics::{cf_relevance, simulatability};

/// How counterfactuals are chosen for an explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    /// The trees the explanation was grown from.
    #[default]
    DfsAncestors,
    /// Every proper sub-tree that still contains the target.
    Exhaustive,
}

/// An (explanation, counterfactual) pair before scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSkeleton {
    pub explanation: Subgraph,
    pub counterfactual: Subgraph,
}

/// Counterfactuals that strip everything but the target are only allowed
/// for two-node explanations, where nothing else is left to remove.
pub fn admissible(explanation: &Subgraph, counterfactual: &Subgraph) -> bool {
    counterfactual.node_count() > 1 || explanation.node_count() < 3
}

/// Pairs every enumerated tree with its counterfactuals.
pub fn generate_pairs(e: &Enumeration, mode: PairingMode) -> Vec<PairSkeleton> {
    let mut pairs = Vec::new();
    for (i, s) in e.subgraphs().iter().enumerate() {
        let counterfactuals: Vec<usize> = match mode {
            PairingMode::DfsAncestors => e.ancestors(i).collect(),
            PairingMode::Exhaustive => {
                let mut found: Vec<usize> = proper_edge_subsets(s.edges())
                    .filter_map(|sub| e.position(&sub))
                    .collect();
                found.sort_unstable();
                found
            }
        };
        pairs.extend(
            counterfactuals
                .into_iter()
                .map(|j| e.get(j))
                .filter(|cf| admissible(s, cf))
                .map(|cf| PairSkeleton {
                    explanation: s.clone(),
                    counterfactual: cf.clone(),
                }),
        );
    }
    pairs
}

/// Pairs for a tree grown one edge at a time; `chain` lists the trees from
/// the single target node up to (excluding) `explanation`.
pub fn pairs_for_grown(
    g: &Graph,
    explanation: &Subgraph,
    chain: &[Subgraph],
    mode: PairingMode,
) -> Vec<PairSkeleton> {
    let counterfactuals: Vec<Subgraph> = match mode {
        PairingMode::DfsAncestors => chain.iter().rev().cloned().collect(),
        PairingMode::Exhaustive => proper_edge_subsets(explanation.edges())
            .map(|edges| Subgraph::from_sorted(g, explanation.target(), edges))
            .filter(|s| validate_subgraph(g, s).is_ok())
            .collect(),
    };
    counterfactuals
        .into_iter()
        .filter(|cf| admissible(explanation, cf))
        .map(|cf| PairSkeleton {
            explanation: explanation.clone(),
            counterfactual: cf,
        })
        .collect()
}

/// Sorted proper subsets of a sorted edge list, in bitmask order.
fn proper_edge_subsets(edges: &[EdgeId]) -> impl Iterator<Item = Vec<EdgeId>> + '_ {
    let n = edges.len();
    let full = if n == 0 { 0 } else { (1u64 << n) - 1 };
    (0..full).map(move |bits| {
        (0..n)
            .filter(|&k| bits >> k & 1 == 1)
            .map(|k| edges[k])
            .collect()
    })
}

/// A subgraph with its prediction and simulatability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphCandidate {
    pub subgraph: Subgraph,
    pub distribution: ClassDistribution,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationPair {
    pub explanation: SubgraphCandidate,
    pub counterfactual: SubgraphCandidate,
    /// Nodes removed from the explanation to obtain the counterfactual.
    pub delta_nodes: Vec<NodeId>,
    pub delta_size: usize,
    pub mu: f64,
    pub mu_abs: f64,
}

/// Runs the model on subgraphs of one target and caches `nu` per tree.
pub struct Evaluator<'a> {
    model: &'a Model,
    graph: &'a Graph,
    target: NodeId,
    epsilon: f64,
    injection: Option<Vec<f64>>,
    full: ClassDistribution,
    memo: Option<HashMap<Vec<EdgeId>, SubgraphCandidate>>,
    forward_passes: usize,
}

impl<'a> Evaluator<'a> {
    pub fn new(model: &'a Model, graph: &'a Graph, target: NodeId, epsilon: f64) -> Result<Self> {
        Self::with_injection(model, graph, target, epsilon, None)
    }

    /// `injection` is an extra message added to the target's last-layer
    /// aggregation in every pass, full graph included.
    pub(crate) fn with_injection(
        model: &'a Model,
        graph: &'a Graph,
        target: NodeId,
        epsilon: f64,
        injection: Option<Vec<f64>>,
    ) -> Result<Self> {
        let pass = Pass {
            injection: injection.as_deref(),
            ..Pass::default()
        };
        let logits = model.forward_pass(graph, target, &pass)?.output;
        Ok(Self {
            model,
            graph,
            target,
            epsilon,
            full: ClassDistribution::from_logits(&logits),
            injection,
            memo: Some(HashMap::new()),
            forward_passes: 0,
        })
    }

    /// Turns the cache off; results are unchanged, only the pass count grows.
    pub fn without_memo(mut self) -> Self {
        self.memo = None;
        self
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    pub fn model(&self) -> &'a Model {
        self.model
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn full_distribution(&self) -> &ClassDistribution {
        &self.full
    }

    /// Subgraph forward passes run so far.
    pub fn forward_passes(&self) -> usize {
        self.forward_passes
    }

    pub fn candidate(&mut self, s: &Subgraph) -> Result<SubgraphCandidate> {
        if s.target() != self.target {
            return Err(Error::TargetNotInSubgraph(self.target));
        }
        if let Some(hit) = self.memo.as_ref().and_then(|m| m.get(s.edges())) {
            return Ok(hit.clone());
        }
        let pass = Pass {
            restrict: Some(s),
            injection: self.injection.as_deref(),
            ..Pass::default()
        };
        let logits = self
            .model
            .forward_pass(self.graph, self.target, &pass)?
            .output;
        self.forward_passes += 1;
        let distribution = ClassDistribution::from_logits(&logits);
        let nu = simulatability(&self.full, &distribution, self.epsilon)?;
        let candidate = SubgraphCandidate {
            subgraph: s.clone(),
            distribution,
            nu,
        };
        if let Some(memo) = self.memo.as_mut() {
            memo.insert(s.edges().to_vec(), candidate.clone());
        }
        Ok(candidate)
    }

    pub fn nu(&mut self, s: &Subgraph) -> Result<f64> {
        Ok(self.candidate(s)?.nu)
    }

    pub fn pair(&mut self, skeleton: &PairSkeleton) -> Result<ExplanationPair> {
        let (g, cf) = (&skeleton.explanation, &skeleton.counterfactual);
        if !cf.is_strict_subtree_of(g) {
            return Err(Error::InvalidConfig(
                "counterfactual is not a strict sub-tree of the explanation".into(),
            ));
        }
        let delta_nodes: Vec<NodeId> = g
            .nodes()
            .iter()
            .copied()
            .filter(|&u| !cf.contains_node(u))
            .collect();
        let explanation = self.candidate(g)?;
        let counterfactual = self.candidate(cf)?;
        let mu = cf_relevance(explanation.nu, counterfactual.nu, delta_nodes.len())?;
        Ok(ExplanationPair {
            explanation,
            counterfactual,
            delta_size: delta_nodes.len(),
            delta_nodes,
            mu,
            mu_abs: mu.abs(),
        })
    }
}

/// Scores every pair, sharing forward passes between pairs through the
/// evaluator's cache.
pub fn evaluate_pairs(
    evaluator: &mut Evaluator<'_>,
    pairs: &[PairSkeleton],
) -> Result<Vec<ExplanationPair>> {
    pairs.iter().map(|p| evaluator.pair(p)).collect()
}
