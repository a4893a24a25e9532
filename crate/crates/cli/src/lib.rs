//! Command line front end. Every subcommand is a plain function so tests
//! can drive it without spawning the binary.

pub mod args;
pub mod commands;
pub mod doc;
pub mod manifest;

use anyhow::Result;

pub use args::{Cli, Command};
pub use commands::{
    enumerate_command, explain_command, robustness_command, shapley_command, synth_command, Outcome,
};

/// Runs a parsed command line. `env_seed` is the value of `MOEXP_SEED`,
/// which overrides `--seed` when present.
pub fn run(cli: &Cli, env_seed: Option<&str>) -> Result<Outcome> {
    let seed_of = |flag: u64| manifest::effective_seed(flag, env_seed);
    match &cli.command {
        Command::Explain(a) => explain_command(a, seed_of(a.run.seed)?),
        Command::Enumerate(a) => enumerate_command(a),
        Command::Shapley(a) => shapley_command(a, seed_of(a.run.seed)?),
        Command::Robustness(a) => robustness_command(a, seed_of(a.run.seed)?),
        Command::Synth(a) => synth_command(a, seed_of(a.seed)?),
    }
}
