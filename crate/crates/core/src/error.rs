use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(NodeId, NodeId),
    #[error("node id out of range: {id} (node count {count})")]
    NodeOutOfRange { id: NodeId, count: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("feature length mismatch: node {node} has {found}, expected {expected}")]
    FeatureLengthMismatch {
        node: NodeId,
        expected: usize,
        found: usize,
    },
    #[error("directed graphs are not supported")]
    Directed,
    #[error("edge id out of range: {0}")]
    EdgeOutOfRange(usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("layer dimension mismatch: layer {layer} expects {expected} inputs, previous layer produces {found}")]
    LayerDimensionMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown activation {0:?}")]
    UnknownActivation(String),
    #[error("unknown aggregator {0:?}")]
    UnknownAggregator(String),
    #[error("target {0} not in subgraph")]
    TargetNotInSubgraph(NodeId),
    #[error("distribution length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("delta size must be at least 1")]
    EmptyDelta,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate class direction for class {0}")]
    DegenerateClassDirection(usize),
    #[error("expected a {expected}-layer model, got {found} layers")]
    LayerCount { expected: usize, found: usize },
    #[error("invalid document: {0}")]
    Document(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
