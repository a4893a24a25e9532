use std::collections::BTreeSet;

use crate::graph::{l_hop_neighborhood, Graph, NodeId};

/// Nodes within `depth` hops of `v` (on the full graph) that are not in the
/// removed set `delta`. Their messages still reach `v` after the removal,
/// so they confound the effect attributed to `delta`.
pub fn confounder_set(g: &Graph, v: NodeId, depth: usize, delta: &[NodeId]) -> BTreeSet<NodeId> {
    let mut set = l_hop_neighborhood(g, v, depth);
    for u in delta {
        set.remove(u);
    }
    set
}
