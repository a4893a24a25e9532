use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug, Clone)]
#[command(
    name = "moexp",
    version,
    about = "Pareto-optimal subgraph explanations for GCN node predictions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Explain node predictions; writes one JSON document per node.
    Explain(ExplainArgs),
    /// List the candidate trees around each target as CSV.
    Enumerate(EnumerateArgs),
    /// Per-node Shapley values as CSV.
    Shapley(ShapleyArgs),
    /// Message or weight perturbation sweeps as CSV.
    Robustness(RobustnessArgs),
    /// Generate a synthetic graph and its prototype model.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Graph JSON document.
    #[arg(long)]
    pub graph: PathBuf,

    /// Model weights JSON document.
    #[arg(long)]
    pub weights: PathBuf,

    /// Comma separated node ids, `all`, or `all-test` (unlabeled nodes).
    #[arg(long, default_value = "all-test")]
    pub targets: String,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Largest explanation size in nodes.
    #[arg(short = 'C', long = "max-nodes", default_value_t = 4)]
    pub max_nodes: usize,

    /// Search diameter in hops around the target.
    #[arg(short = 'D', long = "diameter", default_value_t = 2)]
    pub diameter: usize,

    /// Share of pairs, by rank sum, listed in each document.
    #[arg(long, default_value_t = 10.0)]
    pub top_percent: f64,

    /// Pair every explanation with all of its sub-trees.
    #[arg(long)]
    pub exhaustive_cf: bool,

    /// Smoothing applied to distributions before the divergence.
    #[arg(long, default_value_t = moexp_core::metrics::DEFAULT_EPSILON)]
    pub epsilon: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Seed for every random choice; MOEXP_SEED takes precedence.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for per-node jobs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,

    /// Exit successfully even when some nodes fail; failures are recorded.
    #[arg(long)]
    pub keep_going: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    ParetoRank,
    Balanced,
    Random,
    Shapley,
    GradFd,
    GradAnalytic,
    ExternalWeights,
}

#[derive(Args, Debug, Clone)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub run: RunArgs,

    #[arg(long, value_enum, default_value_t = MethodName::ParetoRank)]
    pub method: MethodName,

    /// Finite-difference step for grad-fd.
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,

    /// Edge weights for external-weights: one document or a JSON array.
    #[arg(long)]
    pub edge_weights: Option<PathBuf>,

    /// Output directory; receives node-<id>.json per target.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct EnumerateArgs {
    /// Graph JSON document.
    #[arg(long)]
    pub graph: PathBuf,

    #[arg(long, default_value = "all")]
    pub targets: String,

    #[arg(short = 'C', long = "max-nodes", default_value_t = 4)]
    pub max_nodes: usize,

    #[arg(short = 'D', long = "diameter", default_value_t = 2)]
    pub diameter: usize,

    /// Output CSV file.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ShapleyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub run: RunArgs,

    /// Output CSV file.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Message,
    Weights,
}

#[derive(Args, Debug, Clone)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub run: RunArgs,

    #[arg(long, value_enum)]
    pub mode: Mode,

    /// Grid points per node, endpoints included.
    #[arg(long, default_value_t = 11)]
    pub steps: usize,

    /// Message length (message mode); defaults to the target's own
    /// last-layer input norm.
    #[arg(long)]
    pub magnitude: Option<f64>,

    /// Largest parameter distance (weights mode); defaults to the norm of
    /// the last layer.
    #[arg(long)]
    pub max_distance: Option<f64>,

    /// Output CSV file.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Chain,
    Star,
    PlantedMotif,
    Erdos,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,

    #[arg(long, default_value_t = 10)]
    pub nodes: usize,

    #[arg(long, default_value_t = 2)]
    pub classes: usize,

    #[arg(long, default_value_t = 0.1)]
    pub edge_prob: f64,

    #[arg(long, default_value_t = 10)]
    pub max_degree: usize,

    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output directory; receives graph.json and weights.json.
    #[arg(long, short = 'o')]
    pub output: PathBuf,
}
