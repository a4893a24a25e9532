//! Provenance block embedded in every output.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use moexp_core::rng::PRNG_NAME;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// `config` holds only settings that can change results; thread count and
/// output location are left out so runs can be compared byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub prng: String,
    pub inputs: Vec<InputHash>,
    /// Seconds since the Unix epoch. Always the last field.
    pub timestamp: u64,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seed,
            prng: PRNG_NAME.to_string(),
            inputs: Vec::new(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn add_input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputHash {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
}

/// Reads a file and records its hash in the manifest.
pub fn read_input(manifest: &mut Manifest, role: &str, path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading {role} {}", path.display()))?;
    manifest.add_input(role, path, &bytes);
    String::from_utf8(bytes).with_context(|| format!("{role} {} is not UTF-8", path.display()))
}

/// Seed from the environment when set, else the flag.
pub fn effective_seed(flag: u64, env: Option<&str>) -> Result<u64> {
    match env {
        Some(s) => s
            .trim()
            .parse()
            .with_context(|| format!("MOEXP_SEED={s:?} is not an unsigned integer")),
        None => Ok(flag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_seed_wins() {
        assert_eq!(effective_seed(3, None).unwrap(), 3);
        assert_eq!(effective_seed(3, Some("11")).unwrap(), 11);
        assert!(effective_seed(3, Some("x")).is_err());
    }

    #[test]
    fn hashes_inputs() {
        let mut m = Manifest::new("explain", serde_json::json!({}), 0);
        m.add_input("graph", Path::new("g.json"), b"abc");
        assert_eq!(
            m.inputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
