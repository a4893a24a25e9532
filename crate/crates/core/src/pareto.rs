//! Pareto dominance over (simulatability, |relevance|) and the rank-based
//! selection rules.
//!
//! Both objectives are maximized. Ranks use competition ranking: tied values
//! share the smallest position and the next distinct value skips ahead
//! (1, 1, 3). A pair that dominates another is then ranked at least as well
//! in both orderings and strictly better in one, so the minimum rank sum is
//! never dominated.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::explain::ExplanationPair;
use crate::graph::EdgeId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub nu: f64,
    pub mu_abs: f64,
}

impl Objectives {
    pub fn new(nu: f64, mu_abs: f64) -> Self {
        Self { nu, mu_abs }
    }
}

/// Anything that can be ranked: two objectives plus a deterministic
/// tie-break key.
pub trait Candidate {
    fn objectives(&self) -> Objectives;
    /// Smaller explanations first, then canonical edge order.
    fn tie_key(&self) -> TieKey;
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TieKey {
    pub explanation_nodes: usize,
    pub explanation_edges: Vec<EdgeId>,
    pub counterfactual_edges: Vec<EdgeId>,
}

impl Candidate for ExplanationPair {
    fn objectives(&self) -> Objectives {
        Objectives::new(self.explanation.nu, self.mu_abs)
    }

    fn tie_key(&self) -> TieKey {
        TieKey {
            explanation_nodes: self.explanation.subgraph.node_count(),
            explanation_edges: self.explanation.subgraph.edges().to_vec(),
            counterfactual_edges: self.counterfactual.subgraph.edges().to_vec(),
        }
    }
}

/// `a` is at least as good as `b` in both objectives and better in one.
pub fn dominates(a: Objectives, b: Objectives) -> bool {
    a.nu >= b.nu && a.mu_abs >= b.mu_abs && (a.nu > b.nu || a.mu_abs > b.mu_abs)
}

/// Flags the non-dominated points, in `O(n log n)`.
pub fn pareto_front(points: &[Objectives]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        descending(points[a].nu, points[b].nu).then(descending(points[a].mu_abs, points[b].mu_abs))
    });
    let mut flags = vec![false; points.len()];
    // best |mu| among points with strictly larger nu
    let mut best_above = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let nu = points[order[start]].nu;
        let mut end = start;
        while end < order.len() && points[order[end]].nu == nu {
            end += 1;
        }
        // within a group of equal nu the first entry holds the largest |mu|
        let group_best = points[order[start]].mu_abs;
        for &i in &order[start..end] {
            let mu = points[i].mu_abs;
            flags[i] = mu == group_best && mu > best_above;
        }
        best_above = best_above.max(group_best);
        start = end;
    }
    flags
}

fn descending(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).expect("objectives must not be NaN")
}

/// Competition ranks, best (largest) value ranked 1.
pub fn competition_ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| descending(values[a], values[b]));
    let mut ranks = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = if pos > 0 && values[order[pos - 1]] == values[i] {
            ranks[order[pos - 1]]
        } else {
            pos + 1
        };
    }
    ranks
}

/// Ranked pairs with the chosen one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFront<P> {
    pub pairs: Vec<P>,
    /// Rank by `nu`, descending.
    pub r1: Vec<usize>,
    /// Rank by `|mu|`, descending.
    pub r2: Vec<usize>,
    /// `r1 + r2`.
    pub rank_sum: Vec<usize>,
    pub pareto_flags: Vec<bool>,
    pub selected: Option<usize>,
}

impl<P: Candidate> ScoredFront<P> {
    fn rank(pairs: Vec<P>) -> Self {
        let objectives: Vec<Objectives> = pairs.iter().map(Candidate::objectives).collect();
        let nu: Vec<f64> = objectives.iter().map(|o| o.nu).collect();
        let mu: Vec<f64> = objectives.iter().map(|o| o.mu_abs).collect();
        let r1 = competition_ranks(&nu);
        let r2 = competition_ranks(&mu);
        let rank_sum = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
        Self {
            pareto_flags: pareto_front(&objectives),
            pairs,
            r1,
            r2,
            rank_sum,
            selected: None,
        }
    }

    pub fn selected_pair(&self) -> Option<&P> {
        self.selected.map(|i| &self.pairs[i])
    }

    pub fn front_size(&self) -> usize {
        self.pareto_flags.iter().filter(|&&f| f).count()
    }

    /// Pair indices by ascending rank sum, tie-broken like the selection.
    pub fn by_rank_sum(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.pairs.len()).collect();
        let keys: Vec<TieKey> = self.pairs.iter().map(Candidate::tie_key).collect();
        order.sort_by(|&a, &b| {
            self.rank_sum[a]
                .cmp(&self.rank_sum[b])
                .then_with(|| keys[a].cmp(&keys[b]))
        });
        order
    }

    /// The first `percent`% of [`Self::by_rank_sum`], at least one pair when
    /// any exist.
    pub fn top_percent(&self, percent: f64) -> Vec<usize> {
        let n = self.pairs.len();
        let keep = ((n as f64) * percent / 100.0).ceil() as usize;
        let mut order = self.by_rank_sum();
        order.truncate(keep.clamp(n.min(1), n));
        order
    }
}

/// Picks the pair with the smallest rank sum.
pub fn select_comprehensive<P: Candidate>(pairs: Vec<P>) -> ScoredFront<P> {
    let mut front = ScoredFront::rank(pairs);
    front.selected = front.by_rank_sum().first().copied();
    front
}

/// Picks the pair whose two ranks are closest, then smaller rank sum, then
/// the comprehensive tie rule.
pub fn select_balanced<P: Candidate>(pairs: Vec<P>) -> ScoredFront<P> {
    let mut front = ScoredFront::rank(pairs);
    let keys: Vec<TieKey> = front.pairs.iter().map(Candidate::tie_key).collect();
    front.selected = (0..front.pairs.len()).min_by(|&a, &b| {
        let gap = |i: usize| front.r1[i].abs_diff(front.r2[i]);
        gap(a)
            .cmp(&gap(b))
            .then(front.rank_sum[a].cmp(&front.rank_sum[b]))
            .then_with(|| keys[a].cmp(&keys[b]))
    });
    front
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone)]
    struct Point {
        id: usize,
        size: usize,
        o: Objectives,
    }

    impl Candidate for Point {
        fn objectives(&self) -> Objectives {
            self.o
        }

        fn tie_key(&self) -> TieKey {
            TieKey {
                explanation_nodes: self.size,
                explanation_edges: vec![self.id],
                counterfactual_edges: Vec::new(),
            }
        }
    }

    fn points(scores: &[(f64, f64)]) -> Vec<Point> {
        scores
            .iter()
            .enumerate()
            .map(|(id, &(nu, mu))| Point {
                id,
                size: 3,
                o: Objectives::new(nu, mu),
            })
            .collect()
    }

    fn objectives(scores: &[(f64, f64)]) -> Vec<Objectives> {
        scores.iter().map(|&(a, b)| Objectives::new(a, b)).collect()
    }

    fn brute_front(p: &[Objectives]) -> Vec<bool> {
        (0..p.len())
            .map(|i| !(0..p.len()).any(|j| dominates(p[j], p[i])))
            .collect()
    }

    #[test]
    fn dominance() {
        let o = Objectives::new;
        assert!(dominates(o(-0.1, 0.5), o(-0.3, 0.4)));
        assert!(!dominates(o(-0.1, 0.5), o(-0.1, 0.5)));
        assert!(!dominates(o(-0.1, 0.4), o(-0.2, 0.7)));
        assert!(!dominates(o(-0.2, 0.7), o(-0.1, 0.4)));
    }

    #[test]
    fn fronts() {
        let p = objectives(&[(-0.1, 0.5), (-0.2, 0.7), (-0.3, 0.4)]);
        assert_eq!(pareto_front(&p), vec![true, true, false]);
        let same = objectives(&[(-0.2, 0.3); 4]);
        assert_eq!(pareto_front(&same), vec![true; 4]);
        assert_eq!(pareto_front(&objectives(&[(-1.0, 0.0)])), vec![true]);
        let ties = objectives(&[(-0.1, 0.2), (-0.1, 0.5), (-0.3, 0.5), (-0.3, 0.9)]);
        assert_eq!(pareto_front(&ties), brute_front(&ties));
    }

    #[test]
    fn ranks() {
        assert_eq!(competition_ranks(&[0.5, 0.9, 0.5, 0.1]), vec![2, 1, 2, 4]);
    }

    #[test]
    fn comprehensive_example() {
        let f = select_comprehensive(points(&[(-0.1, 0.9), (-0.2, 0.5), (-0.3, 0.6)]));
        assert_eq!(f.r1, vec![1, 2, 3]);
        assert_eq!(f.r2, vec![1, 3, 2]);
        assert_eq!(f.rank_sum, vec![2, 5, 5]);
        assert_eq!(f.selected, Some(0));
    }

    #[test]
    fn equal_scores_prefer_smaller_explanation() {
        let mut p = points(&[(-0.2, 0.4), (-0.2, 0.4)]);
        p[0].size = 4;
        p[1].size = 2;
        let f = select_comprehensive(p);
        assert_eq!((f.r1.clone(), f.r2.clone()), (vec![1, 1], vec![1, 1]));
        assert_eq!(f.selected, Some(1));
    }

    #[test]
    fn balanced() {
        let f = select_balanced(points(&[(-0.1, 0.1), (-0.2, 0.2), (-0.3, 0.3)]));
        assert_eq!(f.selected, Some(1));
        assert_eq!(select_balanced(points(&[(-0.4, 0.0)])).selected, Some(0));
        // well balanced but dominated
        let f = select_balanced(points(&[(-0.1, 0.9), (-0.5, 0.5), (-0.2, 1.0)]));
        assert_eq!((f.r1.clone(), f.r2.clone()), (vec![1, 3, 2], vec![2, 3, 1]));
        assert_eq!(f.selected, Some(1));
        assert!(!f.pareto_flags[1]);
        assert_ne!(select_comprehensive(f.pairs).selected, Some(1));
    }

    #[test]
    fn top_percent_bounds() {
        let f = select_comprehensive(points(&[(-0.1, 0.9), (-0.2, 0.5), (-0.3, 0.6)]));
        assert_eq!(f.top_percent(100.0).len(), 3);
        assert_eq!(f.top_percent(1.0), vec![0]);
        assert_eq!(f.top_percent(50.0).len(), 2);
    }

    fn scores() -> impl proptest::strategy::Strategy<Value = Vec<(f64, f64)>> {
        // coarse grid so that ties are common
        proptest::collection::vec((-20i32..=0, 0i32..20), 1..40).prop_map(|v| {
            v.into_iter()
                .map(|(a, b)| (a as f64 / 10.0, b as f64 / 10.0))
                .collect()
        })
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn front_matches_all_pairs(s in scores()) {
            let p = objectives(&s);
            prop_assert_eq!(pareto_front(&p), brute_front(&p));
        }

        #[test]
        fn selection_is_never_dominated(s in scores()) {
            let f = select_comprehensive(points(&s));
            let i = f.selected.unwrap();
            let p = objectives(&s);
            prop_assert!(!(0..p.len()).any(|j| dominates(p[j], p[i])));
            prop_assert!(f.pareto_flags[i]);
        }

        #[test]
        fn monotone_transform_keeps_ranks(s in scores()) {
            let f = select_comprehensive(points(&s));
            let warped: Vec<(f64, f64)> = s.iter().map(|&(a, b)| (a.exp() * 3.0 - 1.0, b * b * b + 2.0)).collect();
            let g = select_comprehensive(points(&warped));
            prop_assert_eq!(&f.r1, &g.r1);
            prop_assert_eq!(&f.r2, &g.r2);
            prop_assert_eq!(f.selected, g.selected);
        }

        #[test]
        fn permutation_keeps_choice(s in scores(), rot in 0usize..40) {
            let p = points(&s);
            let chosen = select_comprehensive(p.clone()).selected_pair().unwrap().id;
            let mut q = p;
            let k = rot % q.len();
            q.rotate_left(k);
            q.reverse();
            prop_assert_eq!(select_comprehensive(q).selected_pair().unwrap().id, chosen);
        }
    }
}
