use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::corpus::CorpusConfig;
use super::policy_train::PolicyConfig;
use super::report::ReportConfig;
use crate::env::Ontology;
use crate::error::{Error, Result};
use crate::gpsarsa::KernelConfig;
use crate::rnn::TrainConfig;
use crate::shaping::ShapingConfig;

/// Kernel amplitude for dialogue policies: puts the prior standard
/// deviation of `Q` at the start state near the success bonus
/// (`20² / ⟨x₀, x₀⟩` with `⟨x₀, x₀⟩ ≈ 5.3` for the desk ontology).
pub const DIALOGUE_KERNEL_SCALE: f64 = 75.0;

/// Everything a run needs. Command-line flags fill it first; a TOML file,
/// when given, overrides whatever it mentions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ontology JSON; the built-in desk ontology when absent.
    pub ontology: Option<PathBuf>,
    pub out: PathBuf,
    pub corpus: CorpusConfig,
    pub rnn: TrainConfig,
    pub shaping: ShapingConfig,
    pub gp: KernelConfig,
    pub policy: PolicyConfig,
    pub report: ReportConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ontology: None,
            out: PathBuf::from("out"),
            corpus: CorpusConfig::default(),
            rnn: TrainConfig::default(),
            shaping: ShapingConfig::default(),
            gp: KernelConfig { kernel_scale: DIALOGUE_KERNEL_SCALE, ..KernelConfig::default() },
            policy: PolicyConfig::default(),
            report: ReportConfig::default(),
        }
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

impl ExperimentConfig {
    /// Applies a TOML overlay; keys present in `text` win.
    pub fn overlay_str(&self, text: &str) -> Result<Self> {
        let overlay: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, overlay);
        let cfg: Self = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn overlay_file(&self, path: impl AsRef<Path>) -> Result<Self> {
        self.overlay_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_ontology(&self) -> Result<Ontology> {
        let o = match &self.ontology {
            Some(p) => Ontology::load(p)?,
            None => Ontology::desk_default(),
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.rnn.validate()?;
        self.shaping.validate()?;
        self.gp.validate()?;
        self.policy.validate()?;
        self.report.validate()
    }
}
