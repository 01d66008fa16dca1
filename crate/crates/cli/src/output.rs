use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{config_hash, to_toml, ExperimentConfig};
use crate::failure::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'a str,
    pub config_hash: &'a str,
    pub config: &'a ExperimentConfig,
    /// In-run checks, e.g. invariant verdicts.
    pub checks: serde_json::Value,
    pub outputs: Vec<OutputEntry>,
}

/// A content-addressed run directory `<root>/<subcommand>-<hash16>`.
pub struct RunDir {
    pub path: PathBuf,
    subcommand: String,
    hash: String,
    outputs: Vec<OutputEntry>,
}

impl RunDir {
    pub fn create(root: &Path, subcommand: &str, config: &ExperimentConfig) -> Result<Self, Failure> {
        let hash = config_hash(subcommand, config);
        let path = root.join(format!("{subcommand}-{}", &hash[..16]));
        std::fs::create_dir_all(&path).map_err(|e| Failure::output_io(format!("{}: {e}", path.display())))?;
        let mut dir = Self {
            path,
            subcommand: subcommand.into(),
            hash,
            outputs: Vec::new(),
        };
        dir.write("config.toml", to_toml(config).as_bytes())?;
        Ok(dir)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let full = self.path.join(name);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Failure::output_io(format!("{}: {e}", parent.display())))?;
        }
        std::fs::write(&full, bytes).map_err(|e| Failure::output_io(format!("{}: {e}", full.display())))?;
        self.outputs.push(OutputEntry {
            path: name.into(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialise");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` and returns the run directory.
    pub fn finish(mut self, config: &ExperimentConfig, checks: serde_json::Value) -> Result<PathBuf, Failure> {
        let outputs = std::mem::take(&mut self.outputs);
        let manifest = Manifest {
            tool: "ca-lift",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: &self.subcommand,
            config_hash: &self.hash,
            config,
            checks,
            outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        text.push('\n');
        let full = self.path.join("manifest.json");
        std::fs::write(&full, text).map_err(|e| Failure::output_io(format!("{}: {e}", full.display())))?;
        Ok(self.path)
    }
}
