use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use moexp_core::analysis::{sweep_node, PerturbKind, PerturbRecord, SweepConfig};
use moexp_core::baselines::{shapley_values, EdgeWeights};
use moexp_core::explain::Evaluator;
use moexp_core::io::{
    parse_edge_weights_set, parse_graph, parse_model, serialize_graph, serialize_model,
};
use moexp_core::synth::{synth_graph, SynthKind, SynthParams};
use moexp_core::{
    enumerate_subgraphs, explain_node, rng, EnumConfig, ExplainConfig, Graph, Method, Model,
    NodeId, PairingMode,
};

use crate::args::{
    EnumerateArgs, ExplainArgs, InputArgs, Kind, MethodName, Mode, RobustnessArgs, SearchArgs,
    ShapleyArgs, SynthArgs,
};
use crate::doc::{ExplanationDoc, NodeDocument, Status};
use crate::manifest::{read_input, Manifest};

/// What a command produced. `exit_code` is 0 when every node succeeded, or
/// when failures were allowed with `--keep-going`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub failures: Vec<(NodeId, String)>,
    pub exit_code: i32,
}

impl Outcome {
    fn new(written: Vec<PathBuf>, failures: Vec<(NodeId, String)>, keep_going: bool) -> Self {
        let exit_code = if failures.is_empty() || keep_going {
            0
        } else {
            1
        };
        Self {
            written,
            failures,
            exit_code,
        }
    }
}

/// Writes through a temporary sibling and renames, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn to_pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("documents serialize");
    out.push(b'\n');
    out
}

/// `all`, `all-test` (nodes without a label) or a comma separated id list.
/// Ids are kept even when out of range so they fail per node. Duplicates
/// are dropped, first occurrence wins.
pub fn resolve_targets(spec: &str, g: &Graph) -> Result<Vec<NodeId>> {
    let spec = spec.trim();
    let ids: Vec<NodeId> = match spec {
        "all" => (0..g.node_count()).collect(),
        "all-test" => (0..g.node_count())
            .filter(|&v| g.label(v).is_none())
            .collect(),
        _ => spec
            .split(',')
            .map(|t| {
                t.trim().parse().with_context(|| {
                    format!("bad target {t:?}: expected a node id, `all` or `all-test`")
                })
            })
            .collect::<Result<_>>()?,
    };
    let mut seen = BTreeSet::new();
    Ok(ids.into_iter().filter(|v| seen.insert(*v)).collect())
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("starting worker pool")
}

fn explain_config(s: &SearchArgs) -> Result<ExplainConfig> {
    if !(s.epsilon > 0.0 && s.epsilon < 1.0) {
        bail!("--epsilon must lie in (0, 1), got {}", s.epsilon);
    }
    Ok(ExplainConfig {
        search: EnumConfig::new(s.max_nodes, s.diameter, s.top_percent)?,
        pairing: if s.exhaustive_cf {
            PairingMode::Exhaustive
        } else {
            PairingMode::DfsAncestors
        },
        epsilon: s.epsilon,
    })
}

fn search_json(s: &SearchArgs) -> serde_json::Value {
    json!({
        "max_nodes": s.max_nodes,
        "diameter": s.diameter,
        "top_percent": s.top_percent,
        "exhaustive_cf": s.exhaustive_cf,
        "epsilon": s.epsilon,
    })
}

struct Loaded {
    graph: Graph,
    model: Model,
    targets: Vec<NodeId>,
}

fn load(input: &InputArgs, manifest: &mut Manifest) -> Result<Loaded> {
    let graph_text = read_input(manifest, "graph", &input.graph)?;
    let weights_text = read_input(manifest, "weights", &input.weights)?;
    let graph =
        parse_graph(&graph_text).with_context(|| format!("parsing {}", input.graph.display()))?;
    let model = parse_model(&weights_text)
        .with_context(|| format!("parsing {}", input.weights.display()))?;
    let targets = resolve_targets(&input.targets, &graph)?;
    Ok(Loaded {
        graph,
        model,
        targets,
    })
}

fn method_for(
    name: MethodName,
    v: NodeId,
    seed: u64,
    fd_step: f64,
    external: &[EdgeWeights],
) -> Result<Method> {
    Ok(match name {
        MethodName::ParetoRank => Method::ParetoRank,
        MethodName::Balanced => Method::Balanced,
        MethodName::Random => Method::Random {
            seed: rng::derive(seed, v as u64),
        },
        MethodName::Shapley => Method::Shapley,
        MethodName::GradFd => Method::GradFd { step: fd_step },
        MethodName::GradAnalytic => Method::GradAnalytic,
        MethodName::ExternalWeights => Method::External(
            external
                .iter()
                .find(|w| w.target == v)
                .cloned()
                .with_context(|| format!("no edge weights for node {v}"))?,
        ),
    })
}

pub fn explain_command(args: &ExplainArgs, seed: u64) -> Result<Outcome> {
    let config = json!({
        "graph": args.input.graph.display().to_string(),
        "weights": args.input.weights.display().to_string(),
        "targets": args.input.targets,
        "search": search_json(&args.search),
        "method": args.method,
        "fd_step": args.fd_step,
        "edge_weights": args.edge_weights.as_ref().map(|p| p.display().to_string()),
    });
    let mut manifest = Manifest::new("explain", config, seed);
    let Loaded {
        graph,
        model,
        targets,
    } = load(&args.input, &mut manifest)?;
    let cfg = explain_config(&args.search)?;
    let external = match (&args.edge_weights, args.method) {
        (Some(path), _) => {
            let text = read_input(&mut manifest, "edge_weights", path)?;
            parse_edge_weights_set(&text, &graph)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        (None, MethodName::ExternalWeights) => {
            bail!("--method external-weights needs --edge-weights")
        }
        (None, _) => Vec::new(),
    };

    let results: Vec<Result<ExplanationDoc>> = pool(args.run.jobs)?.install(|| {
        targets
            .par_iter()
            .map(|&v| {
                let method = method_for(args.method, v, seed, args.fd_step, &external)?;
                let out = explain_node(&model, &graph, v, &cfg, &method)?;
                Ok(ExplanationDoc::new(&graph, &out, args.search.top_percent))
            })
            .collect()
    });

    let mut written = Vec::new();
    let mut failures = Vec::new();
    for (&v, result) in targets.iter().zip(results) {
        let doc = match result {
            Ok(r) => NodeDocument {
                node: v,
                status: Status::Ok,
                error: None,
                result: Some(r),
                manifest: manifest.clone(),
            },
            Err(e) => {
                let msg = format!("{e:#}");
                failures.push((v, msg.clone()));
                NodeDocument {
                    node: v,
                    status: Status::Error,
                    error: Some(msg),
                    result: None,
                    manifest: manifest.clone(),
                }
            }
        };
        let path = args.output.join(format!("node-{v}.json"));
        write_atomic(&path, &to_pretty(&doc))?;
        written.push(path);
    }
    Ok(Outcome::new(written, failures, args.run.keep_going))
}

fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

/// Writes the CSV and its manifest next to it.
fn write_csv<R: Serialize>(
    path: &Path,
    rows: &[R],
    header: &[&str],
    manifest: &Manifest,
) -> Result<Vec<PathBuf>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    write_atomic(path, &bytes)?;
    let side = manifest_path(path);
    write_atomic(&side, &to_pretty(manifest))?;
    Ok(vec![path.to_path_buf(), side])
}

#[derive(Serialize)]
struct TreeRow {
    node: NodeId,
    tree: usize,
    parent: Option<usize>,
    size: usize,
    nodes: String,
    edges: String,
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

pub fn enumerate_command(args: &EnumerateArgs) -> Result<Outcome> {
    let config = json!({
        "graph": args.graph.display().to_string(),
        "targets": args.targets,
        "max_nodes": args.max_nodes,
        "diameter": args.diameter,
    });
    let mut manifest = Manifest::new("enumerate", config, 0);
    let text = read_input(&mut manifest, "graph", &args.graph)?;
    let g = parse_graph(&text).with_context(|| format!("parsing {}", args.graph.display()))?;
    let cfg = EnumConfig::new(args.max_nodes, args.diameter, 100.0)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for v in resolve_targets(&args.targets, &g)? {
        match enumerate_subgraphs(&g, v, &cfg) {
            Ok(e) => rows.extend(e.subgraphs().iter().enumerate().map(|(i, s)| TreeRow {
                node: v,
                tree: i,
                parent: e.parent(i),
                size: s.node_count(),
                nodes: join(s.nodes(), " "),
                edges: join(
                    s.edges().iter().map(|&e| {
                        let (a, b) = g.edge(e);
                        format!("{a}-{b}")
                    }),
                    " ",
                ),
            })),
            Err(e) => failures.push((v, e.to_string())),
        }
    }
    let header = ["node", "tree", "parent", "size", "nodes", "edges"];
    let written = write_csv(&args.output, &rows, &header, &manifest)?;
    Ok(Outcome::new(written, failures, false))
}

#[derive(Serialize)]
struct ShapleyRow {
    node: NodeId,
    contributor: NodeId,
    sv: f64,
    support_count: usize,
}

pub fn shapley_command(args: &ShapleyArgs, seed: u64) -> Result<Outcome> {
    let config = json!({
        "graph": args.input.graph.display().to_string(),
        "weights": args.input.weights.display().to_string(),
        "targets": args.input.targets,
        "search": search_json(&args.search),
    });
    let mut manifest = Manifest::new("shapley", config, seed);
    let Loaded {
        graph,
        model,
        targets,
    } = load(&args.input, &mut manifest)?;
    let cfg = explain_config(&args.search)?;
    let results: Vec<Result<Vec<ShapleyRow>>> = pool(args.run.jobs)?.install(|| {
        targets
            .par_iter()
            .map(|&v| {
                let trees = enumerate_subgraphs(&graph, v, &cfg.search)?;
                let mut ev = Evaluator::new(&model, &graph, v, cfg.epsilon)?;
                let report = shapley_values(&mut ev, &trees)?;
                Ok(report
                    .values
                    .iter()
                    .map(|(&j, e)| ShapleyRow {
                        node: v,
                        contributor: j,
                        sv: e.sv,
                        support_count: e.support_count,
                    })
                    .collect())
            })
            .collect()
    });
    let (rows, failures) = split(&targets, results);
    let header = ["node", "contributor", "sv", "support_count"];
    let written = write_csv(&args.output, &rows, &header, &manifest)?;
    Ok(Outcome::new(written, failures, args.run.keep_going))
}

fn split<T>(targets: &[NodeId], results: Vec<Result<Vec<T>>>) -> (Vec<T>, Vec<(NodeId, String)>) {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&v, r) in targets.iter().zip(results) {
        match r {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => failures.push((v, format!("{e:#}"))),
        }
    }
    (rows, failures)
}

/// Bit-exact CSV header of the robustness output.
pub const ROBUSTNESS_HEADER: [&str; 7] = [
    "node",
    "kind",
    "strength",
    "pred_before",
    "pred_after",
    "jaccard",
    "seed",
];

pub fn robustness_command(args: &RobustnessArgs, seed: u64) -> Result<Outcome> {
    let config = json!({
        "graph": args.input.graph.display().to_string(),
        "weights": args.input.weights.display().to_string(),
        "targets": args.input.targets,
        "search": search_json(&args.search),
        "mode": args.mode,
        "steps": args.steps,
        "magnitude": args.magnitude,
        "max_distance": args.max_distance,
    });
    let mut manifest = Manifest::new("robustness", config, seed);
    let Loaded {
        graph,
        model,
        targets,
    } = load(&args.input, &mut manifest)?;
    let sweep = SweepConfig {
        kind: match args.mode {
            Mode::Message => PerturbKind::Message,
            Mode::Weights => PerturbKind::Weights,
        },
        steps: args.steps,
        seed,
        magnitude: args.magnitude,
        max_distance: args.max_distance,
        explain: explain_config(&args.search)?,
        method: Method::ParetoRank,
    };
    if sweep.steps < 2 {
        bail!("--steps must be at least 2");
    }
    let results: Vec<Result<Vec<PerturbRecord>>> = pool(args.run.jobs)?.install(|| {
        targets
            .par_iter()
            .map(|&v| Ok(sweep_node(&model, &graph, v, &sweep)?))
            .collect()
    });
    let (rows, failures) = split(&targets, results);
    let written = write_csv(&args.output, &rows, &ROBUSTNESS_HEADER, &manifest)?;
    Ok(Outcome::new(written, failures, args.run.keep_going))
}

pub fn synth_command(args: &SynthArgs, seed: u64) -> Result<Outcome> {
    let params = SynthParams {
        kind: match args.kind {
            Kind::Chain => SynthKind::Chain,
            Kind::Star => SynthKind::Star,
            Kind::PlantedMotif => SynthKind::PlantedMotif,
            Kind::Erdos => SynthKind::Erdos,
        },
        nodes: args.nodes,
        classes: args.classes,
        edge_prob: args.edge_prob,
        max_degree: args.max_degree,
        noise: args.noise,
    };
    let s = synth_graph(&params, seed)?;
    let manifest = Manifest::new("synth", json!({ "params": params, "motif": s.motif }), seed);
    let files = [
        ("graph.json", serialize_graph(&s.graph).into_bytes()),
        ("weights.json", serialize_model(&s.model).into_bytes()),
        ("manifest.json", to_pretty(&manifest)),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = args.output.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok(Outcome::new(written, Vec::new(), false))
}
