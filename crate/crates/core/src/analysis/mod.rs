//! Causal checks on explanations and the perturbation harness used for
//! robustness and sanity checks.

mod confounder;
mod perturb;
mod sem;
mod sweep;

pub use confounder::confounder_set;
pub use perturb::{
    jaccard_distance, perturb_message, perturb_weights, perturbing_message, PerturbedContext,
};
pub use sem::{delta_h, sem_expand};
pub use sweep::{run_sanity_sweep, sweep_node, PerturbKind, PerturbRecord, SweepConfig};
