//! Seeded synthetic graphs with a matching hand-built model.
//!
//! Every class `c` has a one-hot prototype feature direction. The first
//! layer projects features onto the prototypes and the second is the
//! identity on those channels, so a node surrounded by class-`c` features
//! predicts `c`.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::{Activation, Aggregator, LayerStack, Matrix, Model};
use crate::graph::{build_graph, Graph, NodeId, NodeInput};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Chain,
    Star,
    PlantedMotif,
    Erdos,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Chain => "chain",
            SynthKind::Star => "star",
            SynthKind::PlantedMotif => "planted-motif",
            SynthKind::Erdos => "erdos",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(SynthKind::Chain),
            "star" => Ok(SynthKind::Star),
            "planted-motif" => Ok(SynthKind::PlantedMotif),
            "erdos" => Ok(SynthKind::Erdos),
            other => Err(Error::InvalidConfig(format!(
                "unknown graph kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub kind: SynthKind,
    pub nodes: usize,
    pub classes: usize,
    /// Erdos only.
    pub edge_prob: f64,
    /// Degree cap for erdos and planted-motif distractors.
    pub max_degree: usize,
    /// Standard deviation of the Gaussian noise added to every feature.
    pub noise: f64,
}

impl SynthParams {
    pub fn new(kind: SynthKind, nodes: usize) -> Self {
        Self {
            kind,
            nodes,
            classes: 2,
            edge_prob: 0.1,
            max_degree: 10,
            noise: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let min_nodes = match self.kind {
            SynthKind::Chain | SynthKind::Star | SynthKind::Erdos => 1,
            SynthKind::PlantedMotif => 4,
        };
        if self.nodes < min_nodes {
            return Err(Error::InvalidConfig(format!(
                "{} needs at least {min_nodes} nodes",
                self.kind
            )));
        }
        if self.classes < 2 {
            return Err(Error::InvalidConfig(
                "at least two classes are required".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(Error::InvalidConfig(format!(
                "edge probability {} outside [0, 1]",
                self.edge_prob
            )));
        }
        if self.max_degree == 0 {
            return Err(Error::InvalidConfig("max degree must be positive".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise {} must be >= 0",
                self.noise
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub graph: Graph,
    pub model: Model,
    /// Planted-motif only: the nodes that decide the target's class.
    pub motif: Option<Vec<NodeId>>,
}

/// Two-layer relu model over one-hot class prototypes.
pub fn prototype_model(classes: usize) -> Result<Model> {
    let stack = LayerStack::new(
        vec![Matrix::identity(classes), Matrix::identity(classes)],
        Activation::Relu,
        Aggregator::Sum,
        true,
    )?;
    Model::new(stack)
}

fn features(class: usize, scale: f64, classes: usize, noise: f64, rng: &mut rng::Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, noise).expect("noise validated");
    (0..classes)
        .map(|c| {
            let base = if c == class { scale } else { 0.0 };
            if noise > 0.0 {
                base + normal.sample(rng)
            } else {
                base
            }
        })
        .collect()
}

pub fn synth_graph(params: &SynthParams, seed: u64) -> Result<Synthetic> {
    params.validate()?;
    let mut rng = rng::seeded(seed);
    let n = params.nodes;
    let k = params.classes;
    let mut motif = None;

    let (labels, scales, edges): (Vec<usize>, Vec<f64>, Vec<(NodeId, NodeId)>) = match params.kind {
        SynthKind::Chain => (
            (0..n).map(|i| i % k).collect(),
            vec![1.0; n],
            (1..n).map(|i| (i - 1, i)).collect(),
        ),
        SynthKind::Star => {
            let labels = std::iter::once(0)
                .chain((1..n).map(|_| rng.random_range(0..k)))
                .collect();
            (labels, vec![1.0; n], (1..n).map(|i| (0, i)).collect())
        }
        SynthKind::Erdos => {
            let labels = (0..n).map(|_| rng.random_range(0..k)).collect();
            let mut degree = vec![0usize; n];
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    // draw for every pair so the cap does not shift the stream
                    let keep = rng.random::<f64>() < params.edge_prob;
                    if keep && degree[a] < params.max_degree && degree[b] < params.max_degree {
                        degree[a] += 1;
                        degree[b] += 1;
                        edges.push((a, b));
                    }
                }
            }
            (labels, vec![1.0; n], edges)
        }
        SynthKind::PlantedMotif => {
            // target 0 carries no signal of its own; the motif 1, 2, 3 hangs
            // off it and carries the target's class at full strength, while
            // distractors of other classes are weak
            let class = rng.random_range(0..k);
            let mut labels = vec![class; 4];
            let mut scales = vec![0.0, 1.0, 1.0, 1.0];
            let mut edges = vec![(0, 1), (0, 2), (1, 3)];
            let mut degree = vec![2, 2, 1, 1];
            let mut anchors: Vec<NodeId> = vec![0];
            for u in 4..n {
                let others: Vec<usize> = (0..k).filter(|&c| c != class).collect();
                labels.push(*others.choose(&mut rng).expect("k >= 2"));
                scales.push(0.25);
                degree.push(0);
                anchors.retain(|&a| degree[a] < params.max_degree);
                let anchor = *anchors.choose(&mut rng).unwrap_or(&0);
                degree[anchor] += 1;
                degree[u] += 1;
                edges.push((anchor, u));
                anchors.push(u);
            }
            motif = Some(vec![1, 2, 3]);
            (labels, scales, edges)
        }
    };

    let nodes = labels
        .iter()
        .zip(&scales)
        .map(|(&label, &scale)| {
            NodeInput::labeled(features(label, scale, k, params.noise, &mut rng), label)
        })
        .collect();
    Ok(Synthetic {
        graph: build_graph(nodes, &edges)?,
        model: prototype_model(k)?,
        motif,
    })
}

/// Star around node 0 whose neighbors 1 and 2 jointly produce the
/// prediction while 3 and 4 cancel (`h_3 = -h_4`). At `angle = 0` the pair
/// 3, 4 is orthogonal to every class direction; larger angles rotate it
/// toward the predicted class without changing the prediction.
pub fn manipulation_scenario(angle: f64) -> Result<(Graph, Model)> {
    let r3 = 3f64.sqrt();
    let theta = Matrix::from_columns(&[
        vec![1.0, 0.0, 0.0],
        vec![-0.5, r3 / 2.0, 0.0],
        vec![-0.5, -r3 / 2.0, 0.0],
    ])?;
    let model = Model::new(LayerStack::new(
        vec![theta],
        Activation::Identity,
        Aggregator::Sum,
        true,
    )?)?;
    let h3 = vec![3.0 * angle.sin(), 0.0, 3.0 * angle.cos()];
    let h4 = h3.iter().map(|x| -x).collect();
    let nodes = vec![
        NodeInput::new(vec![0.0; 3]),
        NodeInput::new(vec![2.0, 2.0 * r3, 0.0]),
        NodeInput::new(vec![2.0, -2.0 * r3, 0.0]),
        NodeInput::new(h3),
        NodeInput::new(h4),
    ];
    let g = build_graph(nodes, &[(0, 1), (0, 2), (0, 3), (0, 4)])?;
    Ok((g, model))
}
