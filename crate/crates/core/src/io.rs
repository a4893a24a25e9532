//! JSON documents for graphs, model weights and edge weights.
//!
//! ```json
//! {"directed": false,
//!  "nodes": [{"id": 0, "features": [0.5, 1.0], "label": 1}, ...],
//!  "edges": [[0, 1], ...]}
//!
//! {"activation": "relu", "self_loop": true, "aggregator": "sum",
//!  "layers": [{"rows": 2, "cols": 3, "data": [...row-major...]}, ...]}
//! ```
//!
//! Node ids must be dense (`0..n`); `aggregator` is optional.

use serde::{Deserialize, Serialize};

use crate::baselines::EdgeWeights;
use crate::error::{Error, Result};
use crate::gcn::{Aggregator, LayerStack, Matrix, Model};
use crate::graph::{build_graph, Graph, NodeId, NodeInput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: NodeId,
    pub features: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub directed: bool,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<[NodeId; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsDoc {
    pub activation: String,
    pub self_loop: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregator: Option<String>,
    pub layers: Vec<MatrixDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeWeightEntry {
    pub edge: [NodeId; 2],
    pub weight: f64,
}

/// Edge weights keyed by endpoints, so files do not depend on edge ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeWeightsDoc {
    pub target: NodeId,
    pub weights: Vec<EdgeWeightEntry>,
}

fn parse<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Document(format!("{what}: {e}")))
}

fn render<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

impl GraphDoc {
    pub fn into_graph(self) -> Result<Graph> {
        if self.directed {
            return Err(Error::Directed);
        }
        let n = self.nodes.len();
        let mut slots: Vec<Option<NodeInput>> = vec![None; n];
        for node in self.nodes {
            if node.id >= n {
                return Err(Error::Document(format!(
                    "graph: node id {} is not dense in 0..{n}",
                    node.id
                )));
            }
            if slots[node.id].is_some() {
                return Err(Error::Document(format!(
                    "graph: node id {} appears twice",
                    node.id
                )));
            }
            slots[node.id] = Some(NodeInput {
                features: node.features,
                label: node.label,
            });
        }
        let inputs = slots.into_iter().map(|s| s.expect("dense ids")).collect();
        let edges: Vec<(NodeId, NodeId)> = self.edges.iter().map(|&[a, b]| (a, b)).collect();
        build_graph(inputs, &edges)
    }

    pub fn from_graph(g: &Graph) -> Self {
        Self {
            directed: false,
            nodes: g
                .node_inputs()
                .into_iter()
                .enumerate()
                .map(|(id, n)| NodeDoc {
                    id,
                    features: n.features,
                    label: n.label,
                })
                .collect(),
            edges: g.edges().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl WeightsDoc {
    pub fn into_model(self) -> Result<Model> {
        let activation = self.activation.parse()?;
        let aggregator = match &self.aggregator {
            Some(a) => a.parse()?,
            None => Aggregator::Sum,
        };
        let layers = self
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                Matrix::new(m.rows, m.cols, m.data)
                    .map_err(|e| Error::Document(format!("weights: layer {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Model::new(LayerStack::new(
            layers,
            activation,
            aggregator,
            self.self_loop,
        )?)
    }

    pub fn from_model(m: &Model) -> Self {
        let stack = m.stack();
        Self {
            activation: stack.activation().as_str().to_string(),
            self_loop: stack.self_loop(),
            aggregator: match stack.aggregator() {
                Aggregator::Sum => None,
                a => Some(a.as_str().to_string()),
            },
            layers: stack
                .layers()
                .iter()
                .map(|l| MatrixDoc {
                    rows: l.rows(),
                    cols: l.cols(),
                    data: l.data().to_vec(),
                })
                .collect(),
        }
    }
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    parse::<GraphDoc>("graph", text)?.into_graph()
}

pub fn serialize_graph(g: &Graph) -> String {
    render(&GraphDoc::from_graph(g))
}

pub fn parse_model(text: &str) -> Result<Model> {
    parse::<WeightsDoc>("weights", text)?.into_model()
}

pub fn serialize_model(m: &Model) -> String {
    render(&WeightsDoc::from_model(m))
}

pub fn parse_edge_weights(text: &str, g: &Graph) -> Result<EdgeWeights> {
    resolve_edge_weights(parse("edge weights", text)?, g)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(EdgeWeightsDoc),
    Many(Vec<EdgeWeightsDoc>),
}

fn resolve_edge_weights(doc: EdgeWeightsDoc, g: &Graph) -> Result<EdgeWeights> {
    if !g.contains_node(doc.target) {
        return Err(Error::NodeOutOfRange {
            id: doc.target,
            count: g.node_count(),
        });
    }
    let mut out = EdgeWeights::new(doc.target);
    for entry in doc.weights {
        let [a, b] = entry.edge;
        let e = g
            .find_edge(a, b)
            .ok_or_else(|| Error::Document(format!("edge weights: ({a}, {b}) is not an edge")))?;
        out.weights.insert(e, entry.weight);
    }
    out.validate(g)?;
    Ok(out)
}

/// Accepts a single document or an array of them, one per target.
pub fn parse_edge_weights_set(text: &str, g: &Graph) -> Result<Vec<EdgeWeights>> {
    let docs = match parse::<OneOrMany>("edge weights", text)? {
        OneOrMany::One(d) => vec![d],
        OneOrMany::Many(v) => v,
    };
    docs.into_iter()
        .map(|d| resolve_edge_weights(d, g))
        .collect()
}

pub fn serialize_edge_weights(w: &EdgeWeights, g: &Graph) -> String {
    render(&EdgeWeightsDoc {
        target: w.target,
        weights: w
            .weights
            .iter()
            .map(|(&e, &weight)| {
                let (a, b) = g.edge(e);
                EdgeWeightEntry {
                    edge: [a, b],
                    weight,
                }
            })
            .collect(),
    })
}
