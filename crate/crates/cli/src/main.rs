use std::process::ExitCode;

use clap::Parser;

use moexp_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var("MOEXP_SEED").ok();
    match run(&cli, env_seed.as_deref()) {
        Ok(outcome) => {
            for (node, err) in &outcome.failures {
                eprintln!("node {node}: {err}");
            }
            for path in &outcome.written {
                println!("{}", path.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
