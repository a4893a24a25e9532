use std::collections::BTreeSet;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::explain::Evaluator;
use crate::explainer::{explain_with, ExplainConfig, Method, NodeExplanation};
use crate::gcn::{ClassDistribution, Matrix, Model};
use crate::graph::{Graph, NodeId};
use crate::rng;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A last-layer message with cosine `target_cos` to the class-`class`
/// column of the last weight matrix and length `magnitude`. The component
/// orthogonal to that column points in a seeded random direction.
pub fn perturbing_message(
    model: &Model,
    class: usize,
    target_cos: f64,
    magnitude: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&target_cos) {
        return Err(Error::InvalidConfig(format!(
            "cosine {target_cos} outside [-1, 1]"
        )));
    }
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "magnitude {magnitude} must be >= 0"
        )));
    }
    let theta_y = model.last_layer().column(class);
    let len = norm(&theta_y);
    if len == 0.0 {
        return Err(Error::DegenerateClassDirection(class));
    }
    let u: Vec<f64> = theta_y.iter().map(|x| x / len).collect();
    let sine = (1.0 - target_cos * target_cos).max(0.0).sqrt();

    let mut w = vec![0.0; u.len()];
    if sine > 0.0 {
        let mut rng = rng::seeded(seed);
        // redraw until the sample has a usable orthogonal part
        for _ in 0..64 {
            let mut r: Vec<f64> = (0..u.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let proj = dot(&r, &u);
            r.iter_mut().zip(&u).for_each(|(x, ui)| *x -= proj * ui);
            let n = norm(&r);
            if n > 1e-6 {
                w = r.into_iter().map(|x| x / n).collect();
                break;
            }
        }
        if norm(&w) == 0.0 {
            return Err(Error::InvalidConfig(
                "no direction orthogonal to the class column (one-dimensional message)".into(),
            ));
        }
    }
    Ok(u.iter()
        .zip(&w)
        .map(|(a, b)| magnitude * (target_cos * a + sine * b))
        .collect())
}

/// The prediction and explanation of `v` once an extra message is fed into
/// its last-layer aggregation.
#[derive(Debug, Clone)]
pub struct PerturbedContext {
    pub class: usize,
    pub message: Vec<f64>,
    pub distribution: ClassDistribution,
    pub explanation: NodeExplanation,
}

/// Injects a message aligned to the predicted class column at the requested
/// cosine and re-runs the explanation search. The message takes part in
/// every forward pass of the search, full graph and subgraphs alike.
#[allow(clippy::too_many_arguments)]
pub fn perturb_message(
    model: &Model,
    g: &Graph,
    v: NodeId,
    target_cos: f64,
    magnitude: f64,
    seed: u64,
    cfg: &ExplainConfig,
    method: &Method,
) -> Result<PerturbedContext> {
    let class = model.forward(g, None, None, v)?.argmax();
    let message = perturbing_message(model, class, target_cos, magnitude, seed)?;
    let evaluator = Evaluator::with_injection(model, g, v, cfg.epsilon, Some(message.clone()))?;
    let explanation = explain_with(evaluator, cfg, method)?;
    Ok(PerturbedContext {
        class,
        distribution: explanation.full_distribution.clone(),
        message,
        explanation,
    })
}

/// Moves the last layer by exactly `target_dist` (Frobenius norm) in a
/// seeded random direction. Earlier layers are untouched.
pub fn perturb_weights(model: &Model, target_dist: f64, seed: u64) -> Result<Model> {
    if !(target_dist >= 0.0 && target_dist.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "distance {target_dist} must be >= 0"
        )));
    }
    let last = model.last_layer();
    let mut rng = rng::seeded(seed);
    let mut direction: Vec<f64> = (0..last.data().len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let n = norm(&direction);
    direction.iter_mut().for_each(|x| *x /= n);
    let data = last
        .data()
        .iter()
        .zip(&direction)
        .map(|(w, d)| w + target_dist * d)
        .collect();
    model.with_last_layer(Matrix::new(last.rows(), last.cols(), data)?)
}

/// `1 - |a & b| / |a | b|`, and 0 for two empty sets.
pub fn jaccard_distance(a: &BTreeSet<NodeId>, b: &BTreeSet<NodeId>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(b).count() as f64 / union as f64
}
