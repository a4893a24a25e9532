//! Multi-objective explanations for graph convolutional network predictions.
//!
//! For a target node the engine enumerates small trees around it, pairs each
//! tree with smaller counterfactual trees, scores every pair on
//! simulatability and counterfactual relevance, and picks a Pareto-optimal
//! pair by comprehensive ranking.
//!
//! ```
//! use moexp_core::{explain_node, ExplainConfig, Method};
//! use moexp_core::synth::{synth_graph, SynthKind, SynthParams};
//!
//! let s = synth_graph(&SynthParams::new(SynthKind::Chain, 5), 1).unwrap();
//! let out = explain_node(&s.model, &s.graph, 2, &ExplainConfig::default(), &Method::ParetoRank).unwrap();
//! assert!(out.explanation.contains_node(2));
//! ```

pub mod analysis;
pub mod baselines;
pub mod enumerate;
pub mod error;
pub mod explain;
pub mod explainer;
pub mod gcn;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod pareto;
pub mod rng;
pub mod synth;

pub use enumerate::{enumerate_subgraphs, EnumConfig, Enumeration};
pub use error::{Error, Result};
pub use explain::{Evaluator, ExplanationPair, PairingMode};
pub use explainer::{explain_node, ExplainConfig, Method, NodeExplanation};
pub use gcn::{Activation, Aggregator, ClassDistribution, Matrix, Model};
pub use graph::{build_graph, Graph, NodeId, NodeInput, Subgraph};
