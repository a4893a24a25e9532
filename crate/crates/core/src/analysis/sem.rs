//! Two-layer networks written out as a structural equation:
//!
//! `h_v = act(W2^T sum_{j in {v} + N(v)} act(W1^T sum_{k in {j} + N(j)} x_k))`
//!
//! evaluated as nested sums straight from the edge list. It shares no code
//! with the layer loop in [`crate::gcn`] and serves as its oracle.

use crate::error::{Error, Result};
use crate::gcn::{Aggregator, LastLayer, LayerStack, Matrix};
use crate::graph::{Graph, NodeId, Subgraph};

// no senders (isolated node, no self loop) sums to zero of width `dim`
fn weighted_sum(terms: &[Vec<f64>], dim: usize, mean: bool) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for t in terms {
        for (o, x) in out.iter_mut().zip(t) {
            *o += x;
        }
    }
    if mean && !terms.is_empty() {
        let n = terms.len() as f64;
        out.iter_mut().for_each(|x| *x /= n);
    }
    out
}

fn apply(theta: &Matrix, a: &[f64]) -> Vec<f64> {
    (0..theta.cols())
        .map(|c| (0..theta.rows()).map(|r| theta.get(r, c) * a[r]).sum())
        .collect()
}

/// Output of `v` after both layers. Only edges of `restrict` carry messages
/// when it is given.
pub fn sem_expand(
    stack: &LayerStack,
    g: &Graph,
    v: NodeId,
    restrict: Option<&Subgraph>,
    last: LastLayer,
) -> Result<Vec<f64>> {
    if stack.depth() != 2 {
        return Err(Error::LayerCount {
            expected: 2,
            found: stack.depth(),
        });
    }
    if g.feature_dim() != stack.input_dim() {
        return Err(Error::Shape(
            "feature length does not match first layer".into(),
        ));
    }
    if let Some(s) = restrict {
        if s.target() != v {
            return Err(Error::TargetNotInSubgraph(v));
        }
    }
    let edges: Vec<(NodeId, NodeId)> = match restrict {
        Some(s) => s.edges().iter().map(|&e| g.edge(e)).collect(),
        None => g.edges().to_vec(),
    };
    // {u} + N(u), self term first when enabled
    let senders = |u: NodeId| -> Vec<NodeId> {
        let mut out = Vec::new();
        if stack.self_loop() {
            out.push(u);
        }
        for &(a, b) in &edges {
            if a == u {
                out.push(b);
            } else if b == u {
                out.push(a);
            }
        }
        out
    };
    let mean = stack.aggregator() == Aggregator::Mean;
    let act = stack.activation();
    let (w1, w2) = (&stack.layers()[0], &stack.layers()[1]);

    let messages: Vec<Vec<f64>> = senders(v)
        .into_iter()
        .map(|j| {
            let inputs: Vec<Vec<f64>> = senders(j)
                .into_iter()
                .map(|k| g.features(k).to_vec())
                .collect();
            apply(w1, &weighted_sum(&inputs, w1.rows(), mean))
                .into_iter()
                .map(|x| act.apply(x))
                .collect()
        })
        .collect();
    let out = apply(w2, &weighted_sum(&messages, w2.rows(), mean));
    Ok(match last {
        LastLayer::Linear => out,
        LastLayer::Activated => out.into_iter().map(|x| act.apply(x)).collect(),
    })
}

/// `h_v` with the explanation kept minus `h_v` with only the counterfactual
/// kept: the effect on `v` of removing the difference.
pub fn delta_h(
    stack: &LayerStack,
    g: &Graph,
    explanation: &Subgraph,
    counterfactual: &Subgraph,
    last: LastLayer,
) -> Result<Vec<f64>> {
    let v = explanation.target();
    let with = sem_expand(stack, g, v, Some(explanation), last)?;
    let without = sem_expand(stack, g, v, Some(counterfactual), last)?;
    Ok(with.iter().zip(&without).map(|(a, b)| a - b).collect())
}
