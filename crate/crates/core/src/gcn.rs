//! Forward-only graph convolution.
//!
//! Each layer aggregates `h_i` (unless the self loop is disabled) plus the
//! mask-weighted messages `h_j` of the neighbors in scope, then applies
//! `h_i = act(W^T a_i)`. The activation is skipped after the last layer and
//! the logits go through a softmax.
//!
//! Every explainer in this crate talks to the network only through the
//! functions here.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, NodeId, Subgraph};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    /// Builds a matrix from equally sized columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape("ragged columns".into()));
        }
        let mut data = vec![0.0; rows * cols];
        for (c, column) in columns.iter().enumerate() {
            for (r, &x) in column.iter().enumerate() {
                data[r * cols + c] = x;
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// `W^T x` for `x` of length `rows`.
    pub fn transpose_mul(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * xr;
            }
        }
        out
    }

    pub fn frobenius_distance(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::UnknownActivation(other.to_string())),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    #[default]
    Sum,
    /// Sum divided by the number of messages (self loop included).
    Mean,
}

impl Aggregator {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregator::Sum => "sum",
            Aggregator::Mean => "mean",
        }
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Aggregator::Sum),
            "mean" => Ok(Aggregator::Mean),
            other => Err(Error::UnknownAggregator(other.to_string())),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Whether the activation is also applied after the last layer. Class
/// distributions always use [`LastLayer::Linear`]; the activated form is the
/// one written in the causal expansion of a two-layer network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LastLayer {
    #[default]
    Linear,
    Activated,
}

/// Per-edge mask weights in `[0, 1]`; unlisted edges weigh 1.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeMask {
    weights: BTreeMap<EdgeId, f64>,
}

impl EdgeMask {
    pub fn ones() -> Self {
        Self::default()
    }

    pub fn set(&mut self, e: EdgeId, w: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidConfig(format!(
                "mask weight {w} for edge {e} outside [0, 1]"
            )));
        }
        self.weights.insert(e, w);
        Ok(())
    }

    pub fn with(mut self, e: EdgeId, w: f64) -> Result<Self> {
        self.set(e, w)?;
        Ok(self)
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.weights.get(&e).copied().unwrap_or(1.0)
    }
}

/// Layer weights without the class-count requirement of [`Model`]; scalar
/// networks used in causal checks live here.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<Matrix>,
    activation: Activation,
    aggregator: Aggregator,
    self_loop: bool,
}

impl LayerStack {
    pub fn new(
        layers: Vec<Matrix>,
        activation: Activation,
        aggregator: Aggregator,
        self_loop: bool,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("at least one layer required".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].rows() != pair[0].cols() {
                return Err(Error::LayerDimensionMismatch {
                    layer: i + 2,
                    expected: pair[1].rows(),
                    found: pair[0].cols(),
                });
            }
        }
        Ok(Self {
            layers,
            activation,
            aggregator,
            self_loop,
        })
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn aggregator(&self) -> Aggregator {
        self.aggregator
    }

    pub fn self_loop(&self) -> bool {
        self.self_loop
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].cols()
    }

    /// Output of node `v` after the last layer.
    pub fn node_output(
        &self,
        g: &Graph,
        v: NodeId,
        restrict: Option<&Subgraph>,
        mask: Option<&EdgeMask>,
        last: LastLayer,
    ) -> Result<Vec<f64>> {
        let pass = Pass {
            restrict,
            mask,
            injection: None,
            last,
        };
        Ok(self.propagate(g, v, &pass)?.output)
    }

    pub(crate) fn propagate(&self, g: &Graph, v: NodeId, pass: &Pass<'_>) -> Result<Trace> {
        if !g.contains_node(v) {
            return Err(Error::NodeOutOfRange {
                id: v,
                count: g.node_count(),
            });
        }
        if g.feature_dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "features have length {}, first layer expects {}",
                g.feature_dim(),
                self.input_dim()
            )));
        }
        let depth = self.depth();
        if let Some(inj) = pass.injection {
            if inj.len() != self.layers[depth - 1].rows() {
                return Err(Error::Shape(format!(
                    "injected message has length {}, last layer expects {}",
                    inj.len(),
                    self.layers[depth - 1].rows()
                )));
            }
        }

        // Local node set with hop distance to v; only nodes at distance
        // <= depth - l are needed at layer l.
        let (nodes, dist): (Vec<NodeId>, Vec<usize>) = match pass.restrict {
            Some(s) => {
                if s.target() != v || !s.contains_node(v) {
                    return Err(Error::TargetNotInSubgraph(v));
                }
                s.nodes().iter().map(|&u| (u, 0)).unzip()
            }
            None => {
                let d = g.hop_distances(v);
                (0..g.node_count())
                    .filter_map(|u| d[u].filter(|&x| x <= depth).map(|x| (u, x)))
                    .unzip()
            }
        };
        let local: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &u)| (u, i)).collect();
        let adjacency: Vec<Vec<(usize, f64)>> = nodes
            .iter()
            .map(|&u| {
                g.incident(u)
                    .iter()
                    .filter(|&&(_, e)| pass.restrict.is_none_or(|s| s.contains_edge(e)))
                    .filter_map(|&(w, e)| {
                        let weight = pass.mask.map_or(1.0, |m| m.get(e));
                        local.get(&w).map(|&j| (j, weight))
                    })
                    .collect()
            })
            .collect();

        let v_local = local[&v];
        let mut h: Vec<Option<Vec<f64>>> = nodes
            .iter()
            .map(|&u| Some(g.features(u).to_vec()))
            .collect();
        let mut penultimate = Vec::new();
        for (l, theta) in self.layers.iter().enumerate() {
            let layer = l + 1;
            let is_last = layer == depth;
            if is_last {
                penultimate = (0..nodes.len())
                    .filter(|&i| i == v_local || adjacency[v_local].iter().any(|&(j, _)| j == i))
                    .map(|i| (nodes[i], h[i].clone().expect("computed")))
                    .collect();
            }
            let mut next: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
            for i in 0..nodes.len() {
                if pass.restrict.is_none() && dist[i] + layer > depth {
                    continue;
                }
                let mut agg = vec![0.0; theta.rows()];
                let mut count = 0usize;
                if self.self_loop {
                    add_scaled(&mut agg, h[i].as_ref().expect("computed"), 1.0);
                    count += 1;
                }
                for &(j, w) in &adjacency[i] {
                    add_scaled(&mut agg, h[j].as_ref().expect("computed"), w);
                    count += 1;
                }
                if is_last && i == v_local {
                    if let Some(inj) = pass.injection {
                        add_scaled(&mut agg, inj, 1.0);
                        count += 1;
                    }
                }
                if self.aggregator == Aggregator::Mean && count > 0 {
                    let n = count as f64;
                    agg.iter_mut().for_each(|x| *x /= n);
                }
                let mut out = theta.transpose_mul(&agg);
                if !is_last || pass.last == LastLayer::Activated {
                    out.iter_mut().for_each(|x| *x = self.activation.apply(*x));
                }
                next[i] = Some(out);
            }
            h = next;
        }
        Ok(Trace {
            output: h[v_local].take().expect("target computed"),
            penultimate,
        })
    }
}

fn add_scaled(acc: &mut [f64], x: &[f64], w: f64) {
    if w == 1.0 {
        acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
    } else {
        acc.iter_mut().zip(x).for_each(|(a, b)| *a += w * b);
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Pass<'a> {
    pub restrict: Option<&'a Subgraph>,
    pub mask: Option<&'a EdgeMask>,
    /// Extra message added to the target's last-layer aggregation.
    pub injection: Option<&'a [f64]>,
    pub last: LastLayer,
}

#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub output: Vec<f64>,
    /// Representations entering the last layer for the target and its
    /// in-scope neighbors.
    pub penultimate: Vec<(NodeId, Vec<f64>)>,
}

/// A classifier: a [`LayerStack`] whose output has at least two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    stack: LayerStack,
}

impl Model {
    pub fn new(stack: LayerStack) -> Result<Self> {
        if stack.output_dim() < 2 {
            return Err(Error::Shape(format!(
                "a classifier needs at least 2 classes, last layer has {}",
                stack.output_dim()
            )));
        }
        Ok(Self { stack })
    }

    /// Relu, sum aggregation, self loops on.
    pub fn from_layers(layers: Vec<Matrix>) -> Result<Self> {
        Self::new(LayerStack::new(
            layers,
            Activation::Relu,
            Aggregator::Sum,
            true,
        )?)
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    pub fn depth(&self) -> usize {
        self.stack.depth()
    }

    pub fn num_classes(&self) -> usize {
        self.stack.output_dim()
    }

    pub fn last_layer(&self) -> &Matrix {
        &self.stack.layers[self.stack.depth() - 1]
    }

    /// Copy of this model with the last layer replaced by a matrix of the
    /// same shape.
    pub fn with_last_layer(&self, theta: Matrix) -> Result<Model> {
        let last = self.last_layer();
        if theta.rows() != last.rows() || theta.cols() != last.cols() {
            return Err(Error::Shape("replacement layer changes shape".into()));
        }
        let mut stack = self.stack.clone();
        let depth = stack.depth();
        stack.layers[depth - 1] = theta;
        Ok(Model { stack })
    }

    pub fn logits(
        &self,
        g: &Graph,
        restrict: Option<&Subgraph>,
        mask: Option<&EdgeMask>,
        v: NodeId,
    ) -> Result<Vec<f64>> {
        self.stack
            .node_output(g, v, restrict, mask, LastLayer::Linear)
    }

    pub fn forward(
        &self,
        g: &Graph,
        restrict: Option<&Subgraph>,
        mask: Option<&EdgeMask>,
        v: NodeId,
    ) -> Result<ClassDistribution> {
        Ok(ClassDistribution::from_logits(
            &self.logits(g, restrict, mask, v)?,
        ))
    }

    pub(crate) fn forward_pass(&self, g: &Graph, v: NodeId, pass: &Pass<'_>) -> Result<Trace> {
        self.stack.propagate(g, v, pass)
    }

    /// `-log P(y)` at `v` under the masked forward pass.
    pub fn masked_loss(&self, g: &Graph, v: NodeId, y: usize, mask: &EdgeMask) -> Result<f64> {
        if y >= self.num_classes() {
            return Err(Error::Shape(format!(
                "class {y} out of range for {} classes",
                self.num_classes()
            )));
        }
        let z = self.logits(g, None, Some(mask), v)?;
        Ok(log_sum_exp(&z) - z[y])
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Softmax output for one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn from_logits(z: &[f64]) -> Self {
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = z.iter().map(|x| (x - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        Self {
            probs: exp.into_iter().map(|e| e / total).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable class, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, NodeInput};

    fn scalar_chain(t: f64) -> Graph {
        // i=0, 1, 2, 3 with chain 2-1-i-3
        let x = [0.0, 0.0, 1.0, t];
        let nodes = x.iter().map(|&v| NodeInput::new(vec![v])).collect();
        build_graph(nodes, &[(2, 1), (1, 0), (0, 3)]).unwrap()
    }

    fn scalar_stack() -> LayerStack {
        let one = Matrix::new(1, 1, vec![1.0]).unwrap();
        LayerStack::new(
            vec![one.clone(), one],
            Activation::Sigmoid,
            Aggregator::Sum,
            true,
        )
        .unwrap()
    }

    #[test]
    fn isolated_node_identity_weights() {
        let g = build_graph(vec![NodeInput::new(vec![1.0, 0.0])], &[]).unwrap();
        let m = Model::from_layers(vec![Matrix::identity(2)]).unwrap();
        assert_eq!(m.logits(&g, None, None, 0).unwrap(), vec![1.0, 0.0]);
        let d = m.forward(&g, None, None, 0).unwrap();
        let e = std::f64::consts::E;
        assert!((d.probs[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((d.probs[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!((d.probs[0] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn all_ones_mask_is_no_mask() {
        let g = scalar_chain(0.3);
        let stack = scalar_stack();
        let mut mask = EdgeMask::ones();
        for e in 0..g.edge_count() {
            mask.set(e, 1.0).unwrap();
        }
        let a = stack
            .node_output(&g, 0, None, None, LastLayer::Linear)
            .unwrap();
        let b = stack
            .node_output(&g, 0, None, Some(&mask), LastLayer::Linear)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_matches_expanded_closed_form() {
        let s = sigmoid;
        for t in [-2.0, 0.0, 0.5, 5.0] {
            let g = scalar_chain(t);
            let h = scalar_stack()
                .node_output(&g, 0, None, None, LastLayer::Activated)
                .unwrap()[0];
            // h_i, h_1, h_3 at layer 1, then the outer sigmoid
            let expected = s(s(0.0 + 0.0 + t) + s(0.0 + 0.0 + 1.0) + s(0.0 + t));
            assert!((h - expected).abs() < 1e-15, "t={t}: {h} vs {expected}");
        }
    }

    #[test]
    fn restriction_drops_outside_nodes() {
        let g = scalar_chain(2.0);
        let stack = scalar_stack();
        let e12 = g.find_edge(1, 2).unwrap();
        let e01 = g.find_edge(0, 1).unwrap();
        let e03 = g.find_edge(0, 3).unwrap();
        let without_two = Subgraph::new(&g, 0, vec![e01, e03]).unwrap();
        let h = stack
            .node_output(&g, 0, Some(&without_two), None, LastLayer::Activated)
            .unwrap()[0];
        let s = sigmoid;
        let expected = s(s(2.0) + s(0.0) + s(2.0));
        assert!((h - expected).abs() < 1e-15);
        // zero mask on 1-2 is the same as dropping node 2
        let mask = EdgeMask::ones().with(e12, 0.0).unwrap();
        let masked = stack
            .node_output(&g, 0, None, Some(&mask), LastLayer::Activated)
            .unwrap()[0];
        assert!((masked - expected).abs() < 1e-15);
    }

    #[test]
    fn target_must_be_subgraph_target() {
        let g = scalar_chain(0.0);
        let s = Subgraph::single(1);
        let err = scalar_stack()
            .node_output(&g, 0, Some(&s), None, LastLayer::Linear)
            .unwrap_err();
        assert_eq!(err, Error::TargetNotInSubgraph(0));
    }

    #[test]
    fn shape_errors() {
        let g = scalar_chain(0.0);
        let m = Model::from_layers(vec![Matrix::identity(2)]).unwrap();
        assert!(matches!(m.forward(&g, None, None, 0), Err(Error::Shape(_))));
        let bad = LayerStack::new(
            vec![Matrix::identity(4).clone(), Matrix::identity(2)],
            Activation::Relu,
            Aggregator::Sum,
            true,
        );
        assert!(matches!(bad, Err(Error::LayerDimensionMismatch { .. })));
        assert_eq!(
            "tanh".parse::<Activation>(),
            Err(Error::UnknownActivation("tanh".into()))
        );
    }

    #[test]
    fn masked_loss_definition() {
        let g = scalar_chain(0.7);
        let theta1 = Matrix::new(1, 2, vec![1.0, -0.5]).unwrap();
        let theta2 = Matrix::new(2, 2, vec![0.3, -0.2, 0.1, 0.4]).unwrap();
        let m = Model::from_layers(vec![theta1, theta2]).unwrap();
        let d = m.forward(&g, None, None, 0).unwrap();
        let y = d.argmax();
        let loss = m.masked_loss(&g, 0, y, &EdgeMask::ones()).unwrap();
        assert!((loss + d.probs[y].ln()).abs() < 1e-14);
    }

    #[test]
    fn certain_prediction_has_zero_loss() {
        let g = build_graph(vec![NodeInput::new(vec![1.0])], &[]).unwrap();
        let m = Model::from_layers(vec![Matrix::new(1, 2, vec![800.0, 0.0]).unwrap()]).unwrap();
        let loss = m.masked_loss(&g, 0, 0, &EdgeMask::ones()).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn mask_outside_receptive_field_is_ignored() {
        // path 0-1-2-3, one-layer model: edges beyond 1 hop cannot matter
        let nodes = (0..4)
            .map(|i| NodeInput::new(vec![i as f64, 1.0]))
            .collect();
        let g = build_graph(nodes, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let m = Model::from_layers(vec![Matrix::new(2, 2, vec![0.5, -1.0, 0.25, 0.75]).unwrap()])
            .unwrap();
        let base = m.masked_loss(&g, 0, 1, &EdgeMask::ones()).unwrap();
        let far = g.find_edge(2, 3).unwrap();
        let masked = m
            .masked_loss(&g, 0, 1, &EdgeMask::ones().with(far, 0.0).unwrap())
            .unwrap();
        assert_eq!(base, masked);
    }
}
