use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::perturb::{jaccard_distance, perturb_message, perturb_weights};
use crate::error::{Error, Result};
use crate::explainer::{explain_node, ExplainConfig, Method};
use crate::gcn::{Aggregator, Model, Pass};
use crate::graph::{Graph, NodeId};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbKind {
    Message,
    Weights,
}

impl PerturbKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PerturbKind::Message => "message",
            PerturbKind::Weights => "weights",
        }
    }
}

impl fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "message" => Ok(PerturbKind::Message),
            "weights" => Ok(PerturbKind::Weights),
            other => Err(Error::InvalidConfig(format!(
                "unknown perturbation kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: PerturbKind,
    pub steps: usize,
    pub seed: u64,
    /// Message length; defaults to the norm of the target's last-layer input.
    pub magnitude: Option<f64>,
    /// Largest weight distance; defaults to the last layer's Frobenius norm.
    pub max_distance: Option<f64>,
    pub explain: ExplainConfig,
    pub method: Method,
}

/// One step of a sweep. `strength` is `-cos` for messages and the
/// parameter distance for weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbRecord {
    pub node: NodeId,
    pub kind: PerturbKind,
    pub strength: f64,
    pub pred_before: usize,
    pub pred_after: usize,
    pub jaccard: f64,
    pub seed: u64,
}

/// `steps` evenly spaced points from `a` to `b`, both ends exact.
fn grid(a: f64, b: f64, steps: usize) -> Vec<f64> {
    let last = steps - 1;
    (0..steps)
        .map(|k| match k {
            0 => a,
            k if k == last => b,
            k => a + (b - a) * k as f64 / last as f64,
        })
        .collect()
}

fn last_layer_input_norm(model: &Model, g: &Graph, v: NodeId) -> Result<f64> {
    let trace = model.forward_pass(g, v, &Pass::default())?;
    let stack = model.stack();
    let mut a = vec![0.0; model.last_layer().rows()];
    let mut count = 0usize;
    for (u, h) in &trace.penultimate {
        if *u == v && !stack.self_loop() {
            continue;
        }
        a.iter_mut().zip(h).for_each(|(x, y)| *x += y);
        count += 1;
    }
    if stack.aggregator() == Aggregator::Mean && count > 0 {
        a.iter_mut().for_each(|x| *x /= count as f64);
    }
    let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(if n > 0.0 { n } else { 1.0 })
}

/// Sweep of one node. The perturbation direction is fixed per node so the
/// strength grid walks along a single line.
pub fn sweep_node(
    model: &Model,
    g: &Graph,
    v: NodeId,
    cfg: &SweepConfig,
) -> Result<Vec<PerturbRecord>> {
    if cfg.steps < 2 {
        return Err(Error::InvalidConfig(format!(
            "steps must be >= 2, got {}",
            cfg.steps
        )));
    }
    let seed = rng::derive(cfg.seed, v as u64);
    let before = explain_node(model, g, v, &cfg.explain, &cfg.method)?;
    let nodes_before = before.explanation_nodes();
    let record = |strength: f64, pred_after: usize, nodes: &_| PerturbRecord {
        node: v,
        kind: cfg.kind,
        strength,
        pred_before: before.predicted_class,
        pred_after,
        jaccard: jaccard_distance(&nodes_before, nodes),
        seed,
    };

    let mut out = Vec::with_capacity(cfg.steps);
    match cfg.kind {
        PerturbKind::Message => {
            let magnitude = match cfg.magnitude {
                Some(m) => m,
                None => last_layer_input_norm(model, g, v)?,
            };
            for cos in grid(1.0, -1.0, cfg.steps) {
                let ctx =
                    perturb_message(model, g, v, cos, magnitude, seed, &cfg.explain, &cfg.method)?;
                let strength = if cos == 0.0 { 0.0 } else { -cos };
                out.push(record(
                    strength,
                    ctx.distribution.argmax(),
                    &ctx.explanation.explanation_nodes(),
                ));
            }
        }
        PerturbKind::Weights => {
            let d_max = cfg.max_distance.unwrap_or_else(|| {
                model
                    .last_layer()
                    .data()
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt()
            });
            for d in grid(0.0, d_max, cfg.steps) {
                let perturbed = perturb_weights(model, d, seed)?;
                let after = explain_node(&perturbed, g, v, &cfg.explain, &cfg.method)?;
                out.push(record(d, after.predicted_class, &after.explanation_nodes()));
            }
        }
    }
    Ok(out)
}

/// Records ordered by node (in the order given), then step.
pub fn run_sanity_sweep(
    model: &Model,
    g: &Graph,
    nodes: &[NodeId],
    cfg: &SweepConfig,
) -> Result<Vec<PerturbRecord>> {
    let mut out = Vec::new();
    for &v in nodes {
        out.extend(sweep_node(model, g, v, cfg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::Matrix;
    use crate::graph::{build_graph, NodeInput};

    fn setup() -> (Graph, Model) {
        let nodes = (0..6)
            .map(|i| NodeInput::new(vec![(i as f64 * 1.3).sin(), (i as f64 * 0.7).cos()]))
            .collect();
        let g = build_graph(nodes, &[(0, 1), (0, 2), (1, 3), (2, 4), (4, 5)]).unwrap();
        let m = Model::from_layers(vec![
            Matrix::new(2, 2, vec![0.9, -0.4, -0.2, 0.8]).unwrap(),
            Matrix::new(2, 2, vec![1.0, -0.6, -0.7, 0.9]).unwrap(),
        ])
        .unwrap();
        (g, m)
    }

    fn config(kind: PerturbKind, steps: usize) -> SweepConfig {
        SweepConfig {
            kind,
            steps,
            seed: 17,
            magnitude: None,
            max_distance: Some(2.0),
            explain: ExplainConfig::default(),
            method: Method::ParetoRank,
        }
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid(1.0, -1.0, 5), vec![1.0, 0.5, 0.0, -0.5, -1.0]);
        assert_eq!(grid(0.0, 0.3, 2), vec![0.0, 0.3]);
    }

    #[test]
    fn weights_sweep_shape() {
        let (g, m) = setup();
        let recs = run_sanity_sweep(&m, &g, &[0, 2], &config(PerturbKind::Weights, 5)).unwrap();
        assert_eq!(recs.len(), 10);
        assert_eq!(
            recs.iter().map(|r| r.node).collect::<Vec<_>>(),
            [0, 0, 0, 0, 0, 2, 2, 2, 2, 2]
        );
        for r in recs.iter().filter(|r| r.strength == 0.0) {
            assert_eq!(r.jaccard, 0.0);
            assert_eq!(r.pred_after, r.pred_before);
        }
        assert_eq!(recs[4].strength, 2.0);
        assert!(recs.iter().all(|r| (0.0..=1.0).contains(&r.jaccard)));
    }

    #[test]
    fn message_sweep_endpoints_and_determinism() {
        let (g, m) = setup();
        let cfg = config(PerturbKind::Message, 3);
        let recs = run_sanity_sweep(&m, &g, &[1], &cfg).unwrap();
        assert_eq!(
            recs.iter().map(|r| r.strength).collect::<Vec<_>>(),
            vec![-1.0, 0.0, 1.0]
        );
        assert_eq!(recs, run_sanity_sweep(&m, &g, &[1], &cfg).unwrap());
    }

    #[test]
    fn rejects_single_step() {
        let (g, m) = setup();
        assert!(run_sanity_sweep(&m, &g, &[0], &config(PerturbKind::Weights, 1)).is_err());
    }
}
