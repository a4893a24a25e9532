//! End-to-end acceptance checks. Runs with its own harness and prints one
//! PASS/FAIL line per check; the process fails if any check fails.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::Rng;

use moexp_cli::{run, Cli};
use moexp_core::analysis::{confounder_set, delta_h, sem_expand};
use moexp_core::baselines::{grad_weights_analytic, grad_weights_fd, shapley_values};
use moexp_core::explain::Evaluator;
use moexp_core::gcn::{LastLayer, LayerStack};
use moexp_core::graph::EdgeId;
use moexp_core::io::{parse_graph, parse_model, serialize_graph, serialize_model};
use moexp_core::metrics::{cf_relevance, simulatability};
use moexp_core::pareto::{
    dominates, pareto_front, select_comprehensive, Candidate, Objectives, TieKey,
};
use moexp_core::rng::{self, Rng as Prng};
use moexp_core::synth::{manipulation_scenario, synth_graph, SynthKind, SynthParams};
use moexp_core::{
    build_graph, enumerate_subgraphs, explain_node, Activation, Aggregator, ClassDistribution,
    EnumConfig, ExplainConfig, Graph, Matrix, Method, Model, NodeId, NodeInput, Subgraph,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

// ---------------------------------------------------------------- helpers

fn random_graph(rng: &mut Prng, n: usize, p: f64, dim: usize) -> Graph {
    let nodes = (0..n)
        .map(|_| NodeInput::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    build_graph(nodes, &edges).unwrap()
}

fn random_tree(rng: &mut Prng, n: usize, dim: usize) -> Graph {
    let nodes = (0..n)
        .map(|_| NodeInput::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let edges: Vec<_> = (1..n).map(|u| (rng.random_range(0..u), u)).collect();
    build_graph(nodes, &edges).unwrap()
}

fn random_matrix(rng: &mut Prng, rows: usize, cols: usize) -> Matrix {
    Matrix::new(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-1.5..1.5))
            .collect(),
    )
    .unwrap()
}

fn random_stack(rng: &mut Prng, dims: &[usize]) -> LayerStack {
    let layers = dims
        .windows(2)
        .map(|w| random_matrix(rng, w[0], w[1]))
        .collect();
    let activation =
        [Activation::Relu, Activation::Sigmoid, Activation::Identity][rng.random_range(0..3)];
    let aggregator = if rng.random_bool(0.5) {
        Aggregator::Sum
    } else {
        Aggregator::Mean
    };
    LayerStack::new(layers, activation, aggregator, rng.random_bool(0.7)).unwrap()
}

/// Trees around `v` found by trying every edge subset: connected, acyclic,
/// holding `v`, at most `max_nodes` nodes, every node within `hops` of `v`.
fn brute_force_trees(g: &Graph, v: NodeId, max_nodes: usize, hops: usize) -> BTreeSet<Vec<EdgeId>> {
    let dist = g.hop_distances(v);
    let near = |u: NodeId| matches!(dist[u], Some(d) if d <= hops);
    let edges: Vec<EdgeId> = (0..g.edge_count())
        .filter(|&e| {
            let (a, b) = g.edge(e);
            near(a) && near(b)
        })
        .collect();
    let mut out = BTreeSet::new();
    out.insert(Vec::new());
    let mut stack: Vec<(usize, Vec<EdgeId>)> = vec![(0, Vec::new())];
    while let Some((next, chosen)) = stack.pop() {
        for (i, &e) in edges.iter().enumerate().skip(next) {
            let mut c = chosen.clone();
            c.push(e);
            if c.len() + 1 > max_nodes {
                continue;
            }
            if is_tree_with(g, &c, v) {
                out.insert(c.clone());
            }
            stack.push((i + 1, c));
        }
    }
    out
}

fn is_tree_with(g: &Graph, edges: &[EdgeId], v: NodeId) -> bool {
    let mut nodes: Vec<NodeId> = edges
        .iter()
        .flat_map(|&e| [g.edge(e).0, g.edge(e).1])
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    if !nodes.contains(&v) || nodes.len() != edges.len() + 1 {
        return false;
    }
    let idx = |u: NodeId| nodes.binary_search(&u).unwrap();
    let mut parent: Vec<usize> = (0..nodes.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &e in edges {
        let (a, b) = g.edge(e);
        let (ra, rb) = (find(&mut parent, idx(a)), find(&mut parent, idx(b)));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

fn undominated(points: &[Objectives], i: usize) -> bool {
    !points.iter().any(|&p| dominates(p, points[i]))
}

// --------------------------------------------------------------- criteria

fn enumeration_exactness() -> Check {
    let mut rng = rng::seeded(1001);
    let mut checked = 0usize;
    let mut trees = 0usize;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let g = random_graph(&mut rng, n, 0.4, 1);
        for v in 0..n {
            let all = brute_force_trees(&g, v, 5, 3);
            for c in 2..=5 {
                for d in 1..=3 {
                    let found =
                        enumerate_subgraphs(&g, v, &EnumConfig::new(c, d, 10.0).unwrap()).unwrap();
                    let got: Vec<Vec<EdgeId>> = found
                        .subgraphs()
                        .iter()
                        .map(|s| s.edges().to_vec())
                        .collect();
                    let unique: BTreeSet<Vec<EdgeId>> = got.iter().cloned().collect();
                    ensure!(
                        unique.len() == got.len(),
                        "duplicates for target {v}, C={c}, D={d}"
                    );
                    let dist = g.hop_distances(v);
                    let expected: BTreeSet<Vec<EdgeId>> = all
                        .iter()
                        .filter(|t| {
                            t.len() < c
                                && t.iter().all(|&e| {
                                    let (a, b) = g.edge(e);
                                    dist[a].unwrap() <= d && dist[b].unwrap() <= d
                                })
                        })
                        .cloned()
                        .collect();
                    ensure!(
                        unique == expected,
                        "set mismatch for target {v}, C={c}, D={d} on {:?}",
                        g.edges()
                    );
                    checked += 1;
                    trees += got.len();
                }
            }
        }
    }
    Ok(format!(
        "{checked} (graph, target, C, D) cases, {trees} trees, no duplicates"
    ))
}

#[derive(Debug, Clone)]
struct Scored {
    o: Objectives,
    key: TieKey,
}

impl Candidate for Scored {
    fn objectives(&self) -> Objectives {
        self.o
    }
    fn tie_key(&self) -> TieKey {
        self.key.clone()
    }
}

fn fuzz_scores(rng: &mut Prng) -> Vec<Scored> {
    let n = rng.random_range(1..=40);
    let coarse = rng.random_bool(0.5);
    (0..n)
        .map(|i| {
            // coarse grids force many ties
            let (nu, mu) = if coarse {
                (
                    -(rng.random_range(0..6) as f64) / 4.0,
                    rng.random_range(0..6) as f64 / 8.0,
                )
            } else {
                (-rng.random::<f64>() * 5.0, rng.random::<f64>())
            };
            Scored {
                o: Objectives::new(nu, mu),
                key: TieKey {
                    explanation_nodes: rng.random_range(1..5),
                    explanation_edges: vec![i],
                    counterfactual_edges: vec![],
                },
            }
        })
        .collect()
}

fn fixture_graphs() -> Vec<(String, Graph, Model)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let read = |f: &str| fs::read_to_string(dir.join(f)).unwrap();
    let scalar = parse_model(&read("scalar_sigmoid.json")).unwrap();
    let two = parse_model(&read("two_channel.json")).unwrap();
    let mut out = Vec::new();
    for g in ["confounder_chain.json", "triangle.json", "pair.json"] {
        let graph = parse_graph(&read(g)).unwrap();
        out.push((format!("{g}/scalar"), graph.clone(), scalar.clone()));
        out.push((format!("{g}/two-channel"), graph, two.clone()));
    }
    for (i, kind) in [
        SynthKind::Chain,
        SynthKind::Star,
        SynthKind::PlantedMotif,
        SynthKind::Erdos,
    ]
    .into_iter()
    .enumerate()
    {
        let mut p = SynthParams::new(kind, 12);
        p.classes = 3;
        p.noise = 0.2;
        p.edge_prob = 0.25;
        let s = synth_graph(&p, i as u64).unwrap();
        out.push((format!("synth-{kind}"), s.graph, s.model));
    }
    for angle in [0.0, std::f64::consts::FRAC_PI_3] {
        let (g, m) = manipulation_scenario(angle).unwrap();
        out.push((format!("manipulation-{angle:.2}"), g, m));
    }
    out
}

fn selection_never_dominated() -> Check {
    let mut rng = rng::seeded(2002);
    for case in 0..1000 {
        let pairs = fuzz_scores(&mut rng);
        let points: Vec<Objectives> = pairs.iter().map(|p| p.o).collect();
        let sel = select_comprehensive(pairs).selected.unwrap();
        ensure!(
            undominated(&points, sel),
            "fuzz case {case}: selection {sel} dominated"
        );
    }
    let mut runs = 0;
    for (name, g, m) in fixture_graphs() {
        for v in 0..g.node_count() {
            for exhaustive in [false, true] {
                let mut cfg = ExplainConfig::default();
                if exhaustive {
                    cfg.pairing = moexp_core::PairingMode::Exhaustive;
                }
                let out = explain_node(&m, &g, v, &cfg, &Method::ParetoRank).unwrap();
                if let Some(sel) = out.front.selected {
                    let points: Vec<Objectives> =
                        out.front.pairs.iter().map(|p| p.objectives()).collect();
                    ensure!(
                        undominated(&points, sel),
                        "{name}, node {v}: selection dominated"
                    );
                }
                runs += 1;
            }
        }
    }
    Ok(format!(
        "1000 fuzzed score sets and {runs} fixture runs, 0 violations"
    ))
}

fn front_matches_oracle() -> Check {
    let mut rng = rng::seeded(2002);
    let mut points_seen = 0;
    for case in 0..1000 {
        let points: Vec<Objectives> = fuzz_scores(&mut rng).iter().map(|p| p.o).collect();
        let oracle: Vec<bool> = (0..points.len()).map(|i| undominated(&points, i)).collect();
        ensure!(
            pareto_front(&points) == oracle,
            "fuzz case {case}: front differs from the all-pairs oracle"
        );
        points_seen += points.len();
    }
    Ok(format!(
        "1000 fuzz cases ({points_seen} points) identical to the all-pairs oracle"
    ))
}

fn sem_oracle() -> Check {
    let mut rng = rng::seeded(3003);
    let mut worst = 0.0f64;
    let mut comparisons = 0;
    for case in 0..500 {
        let d_in = rng.random_range(1..=3);
        let dims = [d_in, rng.random_range(1..=3), rng.random_range(1..=3)];
        let stack = random_stack(&mut rng, &dims);
        let g = if case % 2 == 0 {
            let t = rng.random_range(-2.0..5.0);
            let nodes = [0.0, 0.0, 1.0, t]
                .iter()
                .map(|&x| NodeInput::new((0..d_in).map(|k| x + 0.1 * k as f64).collect()))
                .collect();
            build_graph(nodes, &[(2, 1), (1, 0), (0, 3)]).unwrap()
        } else {
            let n = rng.random_range(2..=9);
            random_tree(&mut rng, n, d_in)
        };
        for v in 0..g.node_count() {
            let trees = enumerate_subgraphs(&g, v, &EnumConfig::default()).unwrap();
            let pick = trees.get(rng.random_range(0..trees.len())).clone();
            for restrict in [None, Some(&pick)] {
                for last in [LastLayer::Linear, LastLayer::Activated] {
                    let a = stack.node_output(&g, v, restrict, None, last).unwrap();
                    let b = sem_expand(&stack, &g, v, restrict, last).unwrap();
                    for (x, y) in a.iter().zip(&b) {
                        worst = worst.max((x - y).abs());
                    }
                    comparisons += 1;
                }
            }
        }
    }
    ensure!(worst <= 1e-12, "largest difference {worst:e}");
    Ok(format!(
        "500 models, {comparisons} node outputs, largest difference {worst:e}"
    ))
}

fn confounder_example() -> Check {
    // chain 2 - 1 - i - 3 with i = 0
    let chain = |t: f64| {
        let nodes = [0.0, 0.0, 1.0, t]
            .iter()
            .map(|&x| NodeInput::new(vec![x]))
            .collect();
        build_graph(nodes, &[(2, 1), (1, 0), (0, 3)]).unwrap()
    };
    let g = chain(0.0);
    let set = confounder_set(&g, 0, 2, &[2]);
    ensure!(set == BTreeSet::from([1, 3]), "confounders {set:?}");
    let one = Matrix::new(1, 1, vec![1.0]).unwrap();
    let stack = LayerStack::new(
        vec![one.clone(), one],
        Activation::Sigmoid,
        Aggregator::Sum,
        true,
    )
    .unwrap();
    let dh = |t: f64| {
        let g = chain(t);
        let full = Subgraph::new(&g, 0, (0..3).collect()).unwrap();
        let cf = full.without_leaf(&g, 2).unwrap();
        delta_h(&stack, &g, &full, &cf, LastLayer::Activated).unwrap()[0]
    };
    let (a, b) = (dh(0.0), dh(5.0));
    ensure!(a != b, "delta h does not depend on node 3");
    Ok(format!(
        "confounders {{1, 3}}; delta h = {a:.12} at h3 = 0 vs {b:.12} at h3 = 5"
    ))
}

fn metric_identities() -> Check {
    let mut rng = rng::seeded(4004);
    let mut worst_self = 0.0f64;
    for _ in 0..2000 {
        let k = rng.random_range(2..=6);
        let z: Vec<f64> = (0..k).map(|_| rng.random_range(-8.0..8.0)).collect();
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-8.0..8.0)).collect();
        let (p, q) = (
            ClassDistribution::from_logits(&z),
            ClassDistribution::from_logits(&w),
        );
        let same = simulatability(&p, &p, 1e-9).unwrap();
        worst_self = worst_self.max(same.abs());
        let (pq, qp) = (
            simulatability(&p, &q, 1e-9).unwrap(),
            simulatability(&q, &p, 1e-9).unwrap(),
        );
        ensure!(pq.to_bits() == qp.to_bits(), "asymmetric: {pq} vs {qp}");
        let (a, b) = (rng.random_range(-10.0..0.0), rng.random_range(-10.0..0.0));
        let size = rng.random_range(1..50);
        let half = cf_relevance(a, b, 2 * size).unwrap();
        let full = cf_relevance(a, b, size).unwrap();
        ensure!(
            half == full / 2.0,
            "relevance {full} at |delta| = {size} but {half} at twice that"
        );
    }
    ensure!(worst_self <= 1e-7, "self divergence {worst_self:e}");
    Ok(format!(
        "2000 cases; |nu(p, p)| <= {worst_self:e}, symmetry bitwise, halving exact"
    ))
}

fn robustness_contrast() -> Check {
    let cfg = ExplainConfig {
        search: EnumConfig::new(3, 2, 10.0).unwrap(),
        ..ExplainConfig::default()
    };
    let expected = BTreeSet::from([0, 1, 2]);
    let mut report = Vec::new();
    for (label, angle) in [("before", 0.0), ("after", std::f64::consts::FRAC_PI_3)] {
        let (g, m) = manipulation_scenario(angle).unwrap();
        let ours = explain_node(&m, &g, 0, &cfg, &Method::ParetoRank)
            .unwrap()
            .explanation_nodes();
        let grad = explain_node(&m, &g, 0, &cfg, &Method::GradAnalytic)
            .unwrap()
            .explanation_nodes();
        ensure!(ours == expected, "{label}: pareto-rank picked {ours:?}");
        if label == "after" {
            ensure!(grad.contains(&3), "after: gradient grew {grad:?}");
        }
        report.push(format!("{label}: pareto-rank {ours:?}, gradient {grad:?}"));
    }
    Ok(report.join("; "))
}

fn finite_differences() -> Check {
    let mut rng = rng::seeded(5005);
    let mut worst = 0.0f64;
    let mut edges = 0;
    let mut skipped = 0;
    for case in 0..100 {
        let d = rng.random_range(1..=4);
        let k = rng.random_range(2..=4);
        let n = rng.random_range(2..=8);
        let g = random_graph(&mut rng, n, 0.4, d);
        let layers = vec![random_matrix(&mut rng, d, k)];
        let aggregator = if rng.random_bool(0.5) {
            Aggregator::Sum
        } else {
            Aggregator::Mean
        };
        let m = Model::new(
            LayerStack::new(layers, Activation::Relu, aggregator, rng.random_bool(0.7)).unwrap(),
        )
        .unwrap();
        let v = rng.random_range(0..n);
        let analytic = grad_weights_analytic(&m, &g, v, 1).unwrap();
        let fd = grad_weights_fd(&m, &g, v, 1, 1e-4).unwrap();
        for (e, &a) in &analytic.weights {
            if a < 1e-8 {
                skipped += 1;
                continue;
            }
            let f = fd.get(*e).unwrap();
            let rel = (f - a).abs() / a;
            ensure!(
                rel < 1e-3,
                "model {case}, edge {e}: analytic {a:e}, fd {f:e}, relative error {rel:e}"
            );
            worst = worst.max(rel);
            edges += 1;
        }
    }
    Ok(format!("100 models, {edges} edges, largest relative error {worst:e} ({skipped} edges below 1e-8 skipped)"))
}

fn runtime() -> Check {
    let cfg = ExplainConfig::default();
    let mut times = Vec::new();
    let mut max_degree = 0;
    for seed in 0..3 {
        let mut p = SynthParams::new(SynthKind::Erdos, 300);
        p.classes = 3;
        p.noise = 0.1;
        p.edge_prob = 0.03;
        p.max_degree = 10;
        let s = synth_graph(&p, seed).unwrap();
        let g = &s.graph;
        max_degree = max_degree.max((0..g.node_count()).map(|v| g.degree(v)).max().unwrap());
        // every node of the densest neighborhoods plus a fixed sample
        let mut nodes: Vec<NodeId> = (0..g.node_count()).collect();
        nodes.sort_by_key(|&v| std::cmp::Reverse(g.degree(v)));
        nodes.truncate(40);
        nodes.extend((0..g.node_count()).step_by(10));
        nodes.sort_unstable();
        nodes.dedup();
        for v in nodes {
            let start = Instant::now();
            explain_node(&s.model, g, v, &cfg, &Method::ParetoRank).unwrap();
            times.push(start.elapsed());
        }
    }
    ensure!(
        max_degree <= 10,
        "generator exceeded the degree cap: {max_degree}"
    );
    times.sort_unstable();
    let median = times[times.len() / 2];
    let worst = *times.last().unwrap();
    ensure!(
        worst < Duration::from_secs(3),
        "slowest node took {worst:?}"
    );
    ensure!(median < Duration::from_millis(500), "median {median:?}");
    Ok(format!(
        "{} nodes, max degree {max_degree}, median {median:?}, slowest {worst:?}",
        times.len()
    ))
}

/// Graphs on `n` nodes up to isomorphism, by adding one node to each graph
/// on `n - 1` nodes in every possible way and keeping canonical forms.
fn graphs_up_to_iso(max_n: usize) -> Vec<(usize, Vec<(usize, usize)>)> {
    fn canonical(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best: Option<Vec<(usize, usize)>> = None;
        loop {
            let mut e: Vec<(usize, usize)> = edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (perm[a], perm[b]);
                    (x.min(y), x.max(y))
                })
                .collect();
            e.sort_unstable();
            if best.as_ref().is_none_or(|b| e < *b) {
                best = Some(e);
            }
            // next permutation
            let Some(i) = (0..n.saturating_sub(1))
                .rev()
                .find(|&i| perm[i] < perm[i + 1])
            else {
                break;
            };
            let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        best.unwrap()
    }
    let mut out = Vec::new();
    let mut level: Vec<Vec<(usize, usize)>> = vec![vec![]];
    out.push((1, level.clone()));
    for n in 2..=max_n {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for g in &level {
            for mask in 0u32..(1 << (n - 1)) {
                let mut e = g.clone();
                e.extend(
                    (0..n - 1)
                        .filter(|&u| mask >> u & 1 == 1)
                        .map(|u| (u, n - 1)),
                );
                let c = canonical(n, &e);
                if seen.insert(c.clone()) {
                    next.push(c);
                }
            }
        }
        out.push((n, next.clone()));
        level = next;
    }
    out.into_iter()
        .flat_map(|(n, gs)| gs.into_iter().map(move |g| (n, g)))
        .collect()
}

fn shapley_oracle() -> Check {
    let graphs = graphs_up_to_iso(6);
    let mut counts = BTreeMap::new();
    for (n, _) in &graphs {
        *counts.entry(*n).or_insert(0) += 1;
    }
    let expected_counts = BTreeMap::from([(1, 1), (2, 2), (3, 4), (4, 11), (5, 34), (6, 156)]);
    ensure!(
        counts == expected_counts,
        "graph generator produced {counts:?}"
    );

    let mut rng = rng::seeded(6006);
    let cfg = EnumConfig::default();
    let mut worst = 0.0f64;
    let mut values = 0;
    for (n, edges) in &graphs {
        let n = *n;
        let nodes = (0..n)
            .map(|_| NodeInput::new((0..2).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let g = build_graph(nodes, edges).unwrap();
        let m = Model::new(random_stack(&mut rng, &[2, 3, 2])).unwrap();
        for v in 0..n {
            let mut ev = Evaluator::new(&m, &g, v, 1e-9).unwrap();
            let trees = enumerate_subgraphs(&g, v, &cfg).unwrap();
            let report = shapley_values(&mut ev, &trees).unwrap();

            // independent pass: own tree list, own forward calls
            let full = m.forward(&g, None, None, v).unwrap();
            let nu = |edges: &[EdgeId]| {
                let s = Subgraph::new(&g, v, edges.to_vec()).unwrap();
                simulatability(&full, &m.forward(&g, Some(&s), None, v).unwrap(), 1e-9).unwrap()
            };
            let all = brute_force_trees(&g, v, cfg.max_nodes, cfg.diameter);
            let mut sums: BTreeMap<NodeId, (f64, usize)> = BTreeMap::new();
            for t in &all {
                for &e in t {
                    let (a, b) = g.edge(e);
                    for j in [a, b] {
                        let degree = t
                            .iter()
                            .filter(|&&f| g.edge(f).0 == j || g.edge(f).1 == j)
                            .count();
                        if j == v || degree != 1 {
                            continue;
                        }
                        let rest: Vec<EdgeId> = t.iter().copied().filter(|&f| f != e).collect();
                        let entry = sums.entry(j).or_insert((0.0, 0));
                        entry.0 += nu(t) - nu(&rest);
                        entry.1 += 1;
                    }
                }
            }
            let got: BTreeSet<NodeId> = report.values.keys().copied().collect();
            let want: BTreeSet<NodeId> = sums.keys().copied().collect();
            ensure!(
                got == want,
                "node sets differ for target {v} on {:?}",
                g.edges()
            );
            for (j, (sum, count)) in sums {
                let e = report.get(j).unwrap();
                ensure!(
                    e.support_count == count,
                    "support of {j}: {} vs {count}",
                    e.support_count
                );
                let diff = (e.sv - sum / count as f64).abs();
                worst = worst.max(diff);
                ensure!(
                    diff <= 1e-12,
                    "value of {j} for target {v}: off by {diff:e}"
                );
                values += 1;
            }
        }
    }
    Ok(format!(
        "{} graphs up to isomorphism, {values} values, largest difference {worst:e}",
        graphs.len()
    ))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut p = SynthParams::new(SynthKind::Erdos, 40);
    p.classes = 3;
    p.noise = 0.3;
    p.edge_prob = 0.08;
    let s = synth_graph(&p, 9).unwrap();
    let graph = dir.path().join("graph.json");
    let weights = dir.path().join("weights.json");
    fs::write(&graph, serialize_graph(&s.graph)).unwrap();
    fs::write(&weights, serialize_model(&s.model)).unwrap();

    let strip = |text: String| -> String {
        text.lines()
            .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut compared = 0;
    for method in ["pareto-rank", "random", "shapley"] {
        let mut outputs = Vec::new();
        for jobs in ["1", "4"] {
            let out = dir.path().join(format!("{method}-{jobs}"));
            let args = [
                "moexp",
                "explain",
                "--graph",
                graph.to_str().unwrap(),
                "--weights",
                weights.to_str().unwrap(),
                "--targets",
                "all",
                "--method",
                method,
                "--seed",
                "77",
                "--jobs",
                jobs,
                "--output",
                out.to_str().unwrap(),
            ];
            let outcome =
                run(&Cli::try_parse_from(args).unwrap(), None).map_err(|e| e.to_string())?;
            ensure!(
                outcome.exit_code == 0,
                "{method} with {jobs} jobs failed: {:?}",
                outcome.failures
            );
            let mut files = BTreeMap::new();
            for path in outcome.written {
                let name = path.file_name().unwrap().to_string_lossy().to_string();
                files.insert(name, strip(fs::read_to_string(&path).unwrap()));
            }
            outputs.push(files);
        }
        ensure!(
            outputs[0].len() == 40,
            "{method}: {} documents",
            outputs[0].len()
        );
        ensure!(
            outputs[0] == outputs[1],
            "{method}: documents differ between 1 and 4 jobs"
        );
        compared += outputs[0].len();
    }
    Ok(format!(
        "{compared} document pairs byte-identical apart from the timestamp line"
    ))
}

fn main() {
    let checks: [Criterion; 11] = [
        ("enumeration equals brute force", enumeration_exactness),
        (
            "rank-sum selection never dominated",
            selection_never_dominated,
        ),
        ("pareto front equals all-pairs oracle", front_matches_oracle),
        ("layer loop equals nested-sum expansion", sem_oracle),
        ("confounder example", confounder_example),
        ("metric identities", metric_identities),
        ("robustness to irrelevant rotation", robustness_contrast),
        (
            "finite differences match analytic gradient",
            finite_differences,
        ),
        ("per-node runtime", runtime),
        ("shapley values equal brute force", shapley_oracle),
        ("outputs independent of thread count", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
