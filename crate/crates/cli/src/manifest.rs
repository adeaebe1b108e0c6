//! Per-command run record: everything needed to repeat the run.

use std::path::Path;

use adrs_core::reduce::Method;
use adrs_core::selector::{RoundReport, TaggedInstance};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GenSynthetic,
    Subtag,
    Train,
    Evaluate,
    Reproduce,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::GenSynthetic => "gen-synthetic",
            CommandKind::Subtag => "subtag",
            CommandKind::Train => "train",
            CommandKind::Evaluate => "evaluate",
            CommandKind::Reproduce => "reproduce",
        }
    }

    pub fn manifest_file(self) -> String {
        format!("{}.manifest.json", self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagRecord {
    pub subset_id: usize,
    pub target_dim: usize,
    pub acc_pca: f64,
    pub acc_tsne: f64,
    pub acc_umap: f64,
    pub label: Method,
}

impl From<&TaggedInstance> for TagRecord {
    fn from(t: &TaggedInstance) -> Self {
        let [acc_pca, acc_tsne, acc_umap] = t.provenance.accuracies;
        TagRecord {
            subset_id: t.provenance.subset_id,
            target_dim: t.provenance.target_dim,
            acc_pca,
            acc_tsne,
            acc_umap,
            label: t.label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: CommandKind,
    /// Fully resolved configuration, input paths included.
    pub config: RunConfig,
    pub stages: Vec<StageTiming>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    #[serde(default)]
    pub tags: Vec<TagRecord>,
    #[serde(default)]
    pub rounds: Vec<RoundReport>,
    #[serde(default)]
    pub best_round: Option<usize>,
    #[serde(default)]
    pub figures: Vec<Table>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: CommandKind, config: RunConfig) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config,
            stages: Vec::new(),
            outputs: Vec::new(),
            tags: Vec::new(),
            rounds: Vec::new(),
            best_round: None,
            figures: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: format!("not a run manifest: {e}"),
        })
    }
}
