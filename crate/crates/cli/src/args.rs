//! Command-line surface. Flags override the config file, which overrides
//! built-in defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::Result;
use crate::manifest::{CommandKind, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "adrs", version, about = "Reduction-method selection for DNA read clustering")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Log at debug level.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic Centers/Clusters pair.
    GenSynthetic {
        #[arg(long)]
        n_clusters: Option<usize>,
        #[arg(long)]
        reads_per_cluster: Option<usize>,
        #[arg(long)]
        center_len: Option<usize>,
    },
    /// Sample training subsets and tag each (subset, dim) with its best method.
    Subtag,
    /// Train the selector on a tagged-instance CSV.
    Train,
    /// Score the selector and the three fixed methods on test subsets.
    Evaluate,
    /// Run subtag, train and evaluate, then emit every figure table and chart.
    Reproduce,
    /// Repeat the command recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        /// Write outputs here instead of the recorded output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Render an SVG chart from a figure CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Take the base configuration from a previous run's manifest.
    #[arg(long, global = true, conflicts_with = "config")]
    pub from_manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    pub clusters: Option<PathBuf>,
    #[arg(long, global = true)]
    pub centers: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tags: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// k-mer length.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Comma-separated target dimensions.
    #[arg(long, global = true, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub split_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub train_subsets: Option<usize>,
    #[arg(long, global = true)]
    pub test_subsets: Option<usize>,
    #[arg(long, global = true)]
    pub clusters_per_subset: Option<usize>,
    #[arg(long, global = true)]
    pub rounds: Option<usize>,
    #[arg(long, global = true)]
    pub f1_target: Option<f64>,
}

impl Overrides {
    pub fn base(&self) -> Result<RunConfig> {
        if let Some(m) = &self.from_manifest {
            Ok(RunManifest::load(m)?.config)
        } else if let Some(c) = &self.config {
            RunConfig::load(c)
        } else {
            Ok(RunConfig::default())
        }
    }

    pub fn apply(&self, cfg: &mut RunConfig) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut cfg.paths.clusters, &self.clusters);
        set(&mut cfg.paths.output_dir, &self.output_dir);
        if self.centers.is_some() {
            cfg.paths.centers = self.centers.clone();
        }
        if self.tags.is_some() {
            cfg.paths.tags = self.tags.clone();
        }
        if self.model.is_some() {
            cfg.paths.model = self.model.clone();
        }
        set(&mut cfg.seed, &self.seed);
        set(&mut cfg.k, &self.k);
        set(&mut cfg.dims, &self.dims);
        set(&mut cfg.split_ratio, &self.split_ratio);
        set(&mut cfg.subsets.train, &self.train_subsets);
        set(&mut cfg.subsets.test, &self.test_subsets);
        set(&mut cfg.subsets.clusters_per_subset, &self.clusters_per_subset);
        set(&mut cfg.selector.rounds, &self.rounds);
        set(&mut cfg.selector.f1_target, &self.f1_target);
    }

    /// Default, then file or manifest, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = self.base()?;
        self.apply(&mut cfg);
        Ok(cfg)
    }
}

/// What a parsed command line asks for.
pub enum Action {
    Run(CommandKind, RunConfig),
    Plot { csv: PathBuf, out: PathBuf },
    ShowConfig(RunConfig),
}

impl Cli {
    pub fn action(&self) -> Result<Action> {
        let kind = match &self.command {
            Command::GenSynthetic {
                n_clusters,
                reads_per_cluster,
                center_len,
            } => {
                let mut cfg = self.overrides.resolve()?;
                let s = &mut cfg.synthetic;
                s.n_clusters = n_clusters.unwrap_or(s.n_clusters);
                s.reads_per_cluster = reads_per_cluster.unwrap_or(s.reads_per_cluster);
                s.center_len = center_len.unwrap_or(s.center_len);
                return Ok(Action::Run(CommandKind::GenSynthetic, cfg));
            }
            Command::Subtag => CommandKind::Subtag,
            Command::Train => CommandKind::Train,
            Command::Evaluate => CommandKind::Evaluate,
            Command::Reproduce => CommandKind::Reproduce,
            Command::Rerun { manifest, output_dir } => {
                let recorded = RunManifest::load(manifest)?;
                let mut cfg = recorded.config;
                if let Some(dir) = output_dir {
                    cfg.paths.output_dir = dir.clone();
                }
                return Ok(Action::Run(recorded.command, cfg));
            }
            Command::Plot { csv, out } => {
                let out = out.clone().unwrap_or_else(|| csv.with_extension("svg"));
                return Ok(Action::Plot { csv: csv.clone(), out });
            }
            Command::ShowConfig => return Ok(Action::ShowConfig(self.overrides.resolve()?)),
        };
        Ok(Action::Run(kind, self.overrides.resolve()?))
    }
}
