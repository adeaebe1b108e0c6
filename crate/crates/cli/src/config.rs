//! Run configuration: TOML file layered under command-line flags.

use std::path::{Path, PathBuf};

use adrs_core::dataset::NoiseModel;
use adrs_core::features::MAX_K;
use adrs_core::reduce::{TsneParams, UmapParams};
use adrs_core::selector::{BoostParams, TaggingParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Optional reference strands; parsed for validation only.
    pub centers: Option<PathBuf>,
    pub clusters: PathBuf,
    pub output_dir: PathBuf,
    /// Tagged-instance input of `train`; defaults to `<output_dir>/tags.csv`.
    pub tags: Option<PathBuf>,
    /// Model input of `evaluate`; defaults to `<output_dir>/model.json`.
    pub model: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            centers: None,
            clusters: PathBuf::from("Clusters.txt"),
            output_dir: PathBuf::from("out"),
            tags: None,
            model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubsetConfig {
    pub train: usize,
    pub test: usize,
    pub clusters_per_subset: usize,
    /// Fraction of training subsets held out for boosting.
    pub heldout_fraction: f64,
}

impl Default for SubsetConfig {
    fn default() -> Self {
        SubsetConfig {
            train: 100,
            test: 54,
            clusters_per_subset: 100,
            heldout_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_clusters: usize,
    pub reads_per_cluster: usize,
    pub center_len: usize,
    pub substitution_rate: f64,
    pub insertion_rate: f64,
    pub deletion_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        let noise = NoiseModel::default();
        SyntheticConfig {
            n_clusters: 1000,
            reads_per_cluster: 8,
            center_len: 110,
            substitution_rate: noise.substitution_rate,
            insertion_rate: noise.insertion_rate,
            deletion_rate: noise.deletion_rate,
        }
    }
}

impl SyntheticConfig {
    pub fn noise(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            substitution_rate: self.substitution_rate,
            insertion_rate: self.insertion_rate,
            deletion_rate: self.deletion_rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReproduceConfig {
    /// Contiguous cluster ranges `[lo, hi)` scored as fixed slices.
    pub slices: Vec<[usize; 2]>,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig {
            slices: vec![[100, 200], [9800, 9900]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    /// Root of every random stream in the run.
    pub seed: u64,
    pub k: usize,
    pub dims: Vec<usize>,
    /// Fraction of clusters assigned to the training side.
    pub split_ratio: f64,
    pub subsets: SubsetConfig,
    pub tsne: TsneParams,
    pub umap: UmapParams,
    pub kmeans_n_init: usize,
    pub selector: BoostParams,
    pub synthetic: SyntheticConfig,
    pub reproduce: ReproduceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            seed: 42,
            k: 5,
            dims: vec![2, 3, 50, 300, 500, 700],
            split_ratio: 0.8,
            subsets: SubsetConfig::default(),
            tsne: TsneParams::default(),
            umap: UmapParams::default(),
            kmeans_n_init: 10,
            selector: BoostParams::default(),
            synthetic: SyntheticConfig::default(),
            reproduce: ReproduceConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Invalid(m));
        if !(1..=MAX_K).contains(&self.k) {
            return bad(format!("k = {} must lie in 1..={MAX_K}", self.k));
        }
        if self.dims.is_empty() {
            return bad("dims must not be empty".into());
        }
        let cols = 4usize.pow(self.k as u32);
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0 || d > cols) {
            return bad(format!("dim {d} outside 1..={cols} (4^k for k = {})", self.k));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio {} not in (0,1)", self.split_ratio));
        }
        let h = self.subsets.heldout_fraction;
        if !(h > 0.0 && h < 1.0) {
            return bad(format!("subsets.heldout_fraction {h} not in (0,1)"));
        }
        if self.subsets.train == 0 || self.subsets.test == 0 || self.subsets.clusters_per_subset < 2 {
            return bad("subset counts must be positive and clusters_per_subset >= 2".into());
        }
        if self.kmeans_n_init == 0 {
            return bad("kmeans_n_init must be >= 1".into());
        }
        if self.selector.rounds == 0 {
            return bad("selector.rounds must be >= 1".into());
        }
        if self.reproduce.slices.iter().any(|[lo, hi]| lo >= hi) {
            return bad("reproduce.slices entries must satisfy lo < hi".into());
        }
        self.tsne.validate()?;
        self.umap.validate()?;
        self.synthetic.noise(0).validate()?;
        Ok(())
    }

    pub fn tagging(&self) -> TaggingParams {
        TaggingParams {
            k: self.k,
            tsne: self.tsne.clone(),
            umap: self.umap.clone(),
            kmeans_n_init: self.kmeans_n_init,
        }
    }

    pub fn tags_path(&self) -> PathBuf {
        self.paths.tags.clone().unwrap_or_else(|| self.paths.output_dir.join(TAGS_FILE))
    }

    pub fn model_path(&self) -> PathBuf {
        self.paths.model.clone().unwrap_or_else(|| self.paths.output_dir.join(MODEL_FILE))
    }
}

pub const TAGS_FILE: &str = "tags.csv";
pub const MODEL_FILE: &str = "model.json";
