use std::collections::BTreeMap;
use std::path::Path;

use ca_lift::{LatticeSpec, RuleSpec};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// One experiment. Every section has defaults, so a config only needs the
/// parts its subcommand reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub rule: RuleConfig,
    /// Seed for the random initial state.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub dim_cap: Option<usize>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub diff_pattern: DiffPatternConfig,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub extents: Vec<usize>,
    pub modulus: u32,
}

/// Rule section. `table-file` is resolved to an explicit table when the
/// config is loaded, so echoed configs never depend on other files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleConfig {
    LinearSum,
    SeededTable { seed: u64 },
    ExplicitTable { values: Vec<u32> },
    TableFile { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub epochs: u64,
    /// Run the same number of epochs backwards after the forward leg.
    pub reverse: bool,
    /// Dump every k-th epoch (the last epoch is always dumped).
    pub dump_every: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            reverse: false,
            dump_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffPatternConfig {
    pub epochs: u64,
    /// Perturbed site; defaults to the lattice centre.
    pub site: Option<Vec<i64>>,
    pub delta: i64,
}

impl Default for DiffPatternConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            site: None,
            delta: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HamiltonianConfig {
    pub order: usize,
    /// Per-mode offsets of the single-site shift generator.
    pub generator_offsets: Vec<i64>,
    /// Per-eigenvalue offsets of the exact logarithm, in ascending principal
    /// order. Empty means the principal branch.
    pub branch_offsets: Vec<i64>,
    pub include_local_terms: bool,
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        Self {
            order: 2,
            generator_offsets: Vec::new(),
            branch_offsets: Vec::new(),
            include_local_terms: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorSource {
    /// `P = −i Σ a(x)`, `Q = −i Σ b(x)` of the configured automaton.
    Automaton,
    /// Random anti-Hermitian pair of size `dim`.
    Random,
    /// Random commuting (diagonal) anti-Hermitian pair of size `dim`.
    RandomCommuting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeConfig {
    pub eps: Vec<f64>,
    pub orders: Vec<usize>,
    pub generators: GeneratorSource,
    pub dim: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            eps: vec![1e-3, 1e-2, 1e-1, 1.0],
            orders: vec![1, 2, 3, 4],
            generators: GeneratorSource::Automaton,
            dim: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Sites on one side of the entanglement cut; defaults to the first half
    /// along axis 0.
    pub cut: Option<Vec<usize>>,
    pub entanglement: bool,
    pub cycle_oracle: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            cut: None,
            entanglement: true,
            cycle_oracle: true,
        }
    }
}

impl ExperimentConfig {
    pub fn lattice_spec(&self) -> Result<LatticeSpec, Failure> {
        Ok(LatticeSpec::new(self.lattice.extents.clone(), self.lattice.modulus)?)
    }

    pub fn rule_spec(&self) -> Result<RuleSpec, Failure> {
        match &self.rule {
            RuleConfig::LinearSum => Ok(RuleSpec::LinearSum),
            RuleConfig::SeededTable { seed } => Ok(RuleSpec::SeededTable { seed: *seed }),
            RuleConfig::ExplicitTable { values } => Ok(RuleSpec::ExplicitTable { values: values.clone() }),
            RuleConfig::TableFile { path } => Err(Failure::invalid_config(format!(
                "rule table file {path} was not resolved"
            ))),
        }
    }

    /// Reads table files relative to `base`, applies the dimension-cap
    /// override and checks everything that can be checked without running.
    pub fn resolve(mut self, base: &Path, dim_cap_override: Option<usize>) -> Result<Self, Failure> {
        if let RuleConfig::TableFile { path } = &self.rule {
            let full = base.join(path);
            let text =
                std::fs::read_to_string(&full).map_err(|e| Failure::config_io(format!("{}: {e}", full.display())))?;
            let spec = RuleSpec::parse_table(&self.lattice_spec()?, &text)?;
            let RuleSpec::ExplicitTable { values } = spec else {
                unreachable!("parse_table builds explicit tables")
            };
            self.rule = RuleConfig::ExplicitTable { values };
        }
        if let Some(cap) = dim_cap_override {
            self.dim_cap = Some(cap);
        }
        let spec = self.lattice_spec()?;
        self.rule_spec()?.compile(&spec)?;
        if self.simulate.dump_every == 0 {
            return Err(Failure::invalid_config("simulate.dump_every must be at least 1"));
        }
        if self.converge.eps.is_empty() {
            return Err(Failure::invalid_config("converge.eps must not be empty"));
        }
        if self.converge.dim == 0 {
            return Err(Failure::invalid_config("converge.dim must be positive"));
        }
        Ok(self)
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap.unwrap_or(ca_lift::DEFAULT_DIM_CAP)
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, Failure> {
    toml::from_str(text).map_err(|e| Failure::config_parse(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config_io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn to_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("configs serialise to TOML")
}

pub const PRESETS: [&str; 3] = ["fig2-classical", "lift-small", "lift-medium"];

pub fn preset(name: &str) -> Result<ExperimentConfig, Failure> {
    let base = |extents: Vec<usize>, modulus: u32, rule: RuleConfig| ExperimentConfig {
        lattice: LatticeConfig { extents, modulus },
        rule,
        seed: 1,
        dim_cap: None,
        simulate: SimulateConfig::default(),
        diff_pattern: DiffPatternConfig::default(),
        hamiltonian: HamiltonianConfig::default(),
        converge: ConvergeConfig::default(),
        spectrum: SpectrumConfig::default(),
    };
    match name {
        "fig2-classical" => {
            let mut c = base(vec![64, 64], 5, RuleConfig::SeededTable { seed: 2 });
            c.simulate.epochs = 60;
            c.simulate.dump_every = 10;
            c.diff_pattern = DiffPatternConfig {
                epochs: 60,
                site: Some(vec![32, 32]),
                delta: 1,
            };
            Ok(c)
        }
        "lift-small" => Ok(base(vec![4], 2, RuleConfig::SeededTable { seed: 4 })),
        "lift-medium" => Ok(base(vec![6], 2, RuleConfig::SeededTable { seed: 4 })),
        other => Err(Failure::unknown_preset(other)),
    }
}

/// Lower-case hex sha256 over the canonical JSON of the resolved config plus
/// the subcommand name.
pub fn config_hash(subcommand: &str, config: &ExperimentConfig) -> String {
    use sha2::{Digest, Sha256};
    let mut doc = BTreeMap::new();
    doc.insert("config", serde_json::to_value(config).expect("config is JSON"));
    doc.insert("subcommand", serde_json::Value::String(subcommand.into()));
    let bytes = serde_json::to_vec(&doc).expect("serialisable");
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for name in PRESETS {
            let c = preset(name).unwrap().resolve(Path::new("."), None).unwrap();
            assert_eq!(c, parse_config(&to_toml(&c)).unwrap());
        }
        assert_eq!(preset("fig2-classical").unwrap().lattice.extents, vec![64, 64]);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse_config("[lattice]\nextents = [4]\nmodulus = 2\n[rule]\nfamily = \"linear-sum\"\n").unwrap();
        assert_eq!(c.seed, 1);
        assert_eq!(c.hamiltonian.order, 2);
        assert_eq!(c.converge.orders, vec![1, 2, 3, 4]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("[lattice]\nextents = [4]\nmodulus = 2\nsize = 3\n[rule]\nfamily = \"linear-sum\"\n");
        assert_eq!(err.unwrap_err().code, "config-parse");
    }

    #[test]
    fn hash_depends_on_subcommand_and_config() {
        let c = preset("lift-small").unwrap();
        let mut d = c.clone();
        d.seed = 2;
        assert_eq!(config_hash("lift", &c), config_hash("lift", &c));
        assert_ne!(config_hash("lift", &c), config_hash("spectrum", &c));
        assert_ne!(config_hash("lift", &c), config_hash("lift", &d));
        assert_eq!(config_hash("lift", &c).len(), 64);
    }

    #[test]
    fn table_file_is_inlined() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("q.txt"), "0,0 -> 0\n0,1 -> 1\n1,0 -> 1\n1,1 -> 0\n").unwrap();
        let c =
            parse_config("[lattice]\nextents = [4]\nmodulus = 2\n[rule]\nfamily = \"table-file\"\npath = \"q.txt\"\n")
                .unwrap()
                .resolve(dir.path(), Some(99))
                .unwrap();
        assert_eq!(
            c.rule,
            RuleConfig::ExplicitTable {
                values: vec![0, 1, 1, 0]
            }
        );
        assert_eq!(c.dim_cap(), 99);
    }
}
