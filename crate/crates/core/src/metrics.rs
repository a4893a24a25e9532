//! Simulatability and counterfactual relevance.

use crate::error::{Error, Result};
use crate::gcn::ClassDistribution;

/// Default mixing weight of the uniform distribution before the KL terms.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// `(1 - eps) p + eps / K`.
pub fn smooth(p: &[f64], eps: f64) -> Vec<f64> {
    let uniform = eps / p.len() as f64;
    p.iter().map(|&x| (1.0 - eps) * x + uniform).collect()
}

/// Negative symmetric KL divergence between the full-graph prediction and a
/// subgraph prediction, after smoothing both. Always `<= 0`.
///
/// `KL(p||q) + KL(q||p)` is accumulated as `sum (p - q)(ln p - ln q)`, which
/// makes the result bitwise symmetric in its arguments.
pub fn simulatability(
    y_full: &ClassDistribution,
    y_sub: &ClassDistribution,
    eps: f64,
) -> Result<f64> {
    if y_full.len() != y_sub.len() {
        return Err(Error::LengthMismatch(y_full.len(), y_sub.len()));
    }
    let p = smooth(&y_full.probs, eps);
    let q = smooth(&y_sub.probs, eps);
    let divergence: f64 = p
        .iter()
        .zip(&q)
        .map(|(&a, &b)| (a - b) * (a.ln() - b.ln()))
        .sum();
    Ok(-divergence)
}

/// `(nu_g - nu_gt) / |delta|`, sign preserved.
pub fn cf_relevance(nu_g: f64, nu_gt: f64, delta_size: usize) -> Result<f64> {
    if delta_size == 0 {
        return Err(Error::EmptyDelta);
    }
    Ok((nu_g - nu_gt) / delta_size as f64)
}
