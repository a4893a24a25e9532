//! One-call explanation of a node with any of the supported methods.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::confounder_set;
use crate::baselines::{
    grad_weights_analytic, grad_weights_fd, grow_subgraph, random_weights, shapley_values,
    EdgeWeights, ShapleyReport,
};
use crate::enumerate::{enumerate_subgraphs, EnumConfig};
use crate::error::Result;
use crate::explain::{
    evaluate_pairs, generate_pairs, pairs_for_grown, Evaluator, ExplanationPair, PairingMode,
};
use crate::gcn::{ClassDistribution, Model};
use crate::graph::{Graph, NodeId, Subgraph};
use crate::metrics::DEFAULT_EPSILON;
use crate::pareto::{select_balanced, select_comprehensive, ScoredFront};

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Exhaustive search, minimum rank sum.
    ParetoRank,
    /// Exhaustive search, most balanced ranks.
    Balanced,
    Random {
        seed: u64,
    },
    Shapley,
    GradFd {
        step: f64,
    },
    GradAnalytic,
    External(EdgeWeights),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ParetoRank => "pareto-rank",
            Method::Balanced => "balanced",
            Method::Random { .. } => "random",
            Method::Shapley => "shapley",
            Method::GradFd { .. } => "grad-fd",
            Method::GradAnalytic => "grad-analytic",
            Method::External(_) => "external-weights",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub search: EnumConfig,
    pub pairing: PairingMode,
    pub epsilon: f64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            search: EnumConfig::default(),
            pairing: PairingMode::DfsAncestors,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeExplanation {
    pub target: NodeId,
    pub method: &'static str,
    pub full_distribution: ClassDistribution,
    pub predicted_class: usize,
    /// Trees considered: the enumeration size, or the grown chain length.
    pub subgraph_count: usize,
    pub front: ScoredFront<ExplanationPair>,
    /// The chosen explanation; the bare target when nothing else exists.
    pub explanation: Subgraph,
    /// Nodes within the model depth of the target that stay in the chosen
    /// counterfactual. `None` without a counterfactual.
    pub confounders: Option<BTreeSet<NodeId>>,
    pub weights: Option<EdgeWeights>,
    pub shapley: Option<ShapleyReport>,
}

impl NodeExplanation {
    pub fn selected(&self) -> Option<&ExplanationPair> {
        self.front.selected_pair()
    }

    pub fn explanation_nodes(&self) -> BTreeSet<NodeId> {
        self.explanation.node_set()
    }
}

pub fn explain_node(
    model: &Model,
    g: &Graph,
    v: NodeId,
    cfg: &ExplainConfig,
    method: &Method,
) -> Result<NodeExplanation> {
    explain_with(Evaluator::new(model, g, v, cfg.epsilon)?, cfg, method)
}

pub(crate) fn explain_with(
    mut evaluator: Evaluator<'_>,
    cfg: &ExplainConfig,
    method: &Method,
) -> Result<NodeExplanation> {
    cfg.search.validate()?;
    let (model, g, v) = (evaluator.model(), evaluator.graph(), evaluator.target());
    let hops = cfg.search.diameter;
    let mut shapley = None;

    let weights = match method {
        Method::ParetoRank | Method::Balanced => None,
        Method::Random { seed } => Some(random_weights(g, v, hops, *seed)),
        Method::GradFd { step } => Some(grad_weights_fd(model, g, v, hops, *step)?),
        Method::GradAnalytic => Some(grad_weights_analytic(model, g, v, hops)?),
        Method::External(w) => {
            w.validate(g)?;
            Some(w.clone())
        }
        Method::Shapley => {
            let trees = enumerate_subgraphs(g, v, &cfg.search)?;
            let report = shapley_values(&mut evaluator, &trees)?;
            let w = report.edge_weights(g);
            shapley = Some(report);
            Some(w)
        }
    };

    let (front, subgraph_count, grown) = match &weights {
        None => {
            let trees = enumerate_subgraphs(g, v, &cfg.search)?;
            let pairs = evaluate_pairs(&mut evaluator, &generate_pairs(&trees, cfg.pairing))?;
            let front = if *method == Method::Balanced {
                select_balanced(pairs)
            } else {
                select_comprehensive(pairs)
            };
            (front, trees.len(), None)
        }
        Some(w) => {
            let grown = grow_subgraph(w, g, v, cfg.search.max_nodes);
            let skeletons = pairs_for_grown(g, &grown.subgraph, &grown.chain, cfg.pairing);
            let pairs = evaluate_pairs(&mut evaluator, &skeletons)?;
            (
                select_comprehensive(pairs),
                grown.chain.len() + 1,
                Some(grown.subgraph),
            )
        }
    };

    let explanation = match (&grown, front.selected_pair()) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => p.explanation.subgraph.clone(),
        (None, None) => Subgraph::single(v),
    };
    let confounders = front
        .selected_pair()
        .map(|p| confounder_set(g, v, model.depth(), &p.delta_nodes));
    let full_distribution = evaluator.full_distribution().clone();
    Ok(NodeExplanation {
        target: v,
        method: method.name(),
        predicted_class: full_distribution.argmax(),
        full_distribution,
        subgraph_count,
        front,
        explanation,
        confounders,
        weights,
        shapley,
    })
}
