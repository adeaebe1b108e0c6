//! Pipeline commands. Each one writes its outputs plus a manifest into the
//! configured output directory.
//!
//! Random streams derive from `config.seed` by stage name:
//! `gen_synthetic`, `split`, `train_subsets`, `test_subsets`, `subtag`,
//! `heldout`, `boost`, `evaluate` and `slice` (indexed by slice position).

use std::path::{Path, PathBuf};
use std::time::Instant;

use adrs_core::dataset::{
    generate_synthetic, parse_centers, parse_clusters, sample_subsets, slice_range, split_clusters, write_centers,
    write_clusters, GroundTruthDataset,
};
use adrs_core::reduce::pca::max_components;
use adrs_core::reduce::Method;
use adrs_core::rng::derive_seed;
use adrs_core::selector::tagging::meta_features_from_matrix;
use adrs_core::selector::{
    best_method, boost_train, evaluate_metrics, read_tagged_csv, split_by_subset, sub_tag, write_tagged_csv,
    BoostOutcome, PreparedSubset, SelectorModel, TaggedInstance,
};

use crate::config::{RunConfig, MODEL_FILE, TAGS_FILE};
use crate::error::{CliError, Result};
use crate::manifest::{CommandKind, RunManifest, StageTiming, TagRecord};
use crate::plot;
use crate::table::Table;

pub const CENTERS_FILE: &str = "Centers.txt";
pub const CLUSTERS_FILE: &str = "Clusters.txt";
pub const ROUNDS_FILE: &str = "rounds.csv";
pub const CV_FILE: &str = "cv.csv";
pub const CELLS_FILE: &str = "evaluate_cells.csv";
pub const PER_DIM_FILE: &str = "evaluate_per_dim.csv";
pub const MEAN_FILE: &str = "evaluate_mean.csv";
pub const METRICS_FILE: &str = "evaluate_metrics.csv";

pub const PER_DIM_COLUMNS: [&str; 5] = ["dim", "mean_acc_selected", "mean_acc_pca", "mean_acc_tsne", "mean_acc_umap"];

/// Collects outputs and timings while a command runs.
struct Recorder {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl Recorder {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn wrote(&mut self, name: &str) {
        if !self.manifest.outputs.iter().any(|o| o == name) {
            self.manifest.outputs.push(name.to_string());
        }
    }

    fn time(&mut self, stage: &str, start: Instant) {
        self.manifest.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    fn warn(&mut self, message: String) {
        log::warn!("{message}");
        self.manifest.warnings.push(message);
    }

    fn write_table(&mut self, table: &Table) -> Result<()> {
        let name = format!("{}.csv", table.name);
        table.write_csv(self.path(&name))?;
        self.wrote(&name);
        Ok(())
    }

    fn write_figure(&mut self, table: Table) -> Result<()> {
        self.write_table(&table)?;
        let svg = plot::render(&table)?;
        let name = format!("{}.svg", table.name);
        let path = self.path(&name);
        std::fs::write(&path, svg).map_err(|e| CliError::io(path, e))?;
        self.wrote(&name);
        self.manifest.figures.push(table);
        Ok(())
    }
}

/// Runs `command` under `config` and returns the saved manifest.
pub fn execute(command: CommandKind, config: &RunConfig) -> Result<RunManifest> {
    config.validate()?;
    let mut resolved = config.clone();
    resolved.paths.tags = Some(config.tags_path());
    resolved.paths.model = Some(config.model_path());
    let out_dir = resolved.paths.output_dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;
    let mut rec = Recorder {
        out_dir,
        manifest: RunManifest::new(command, resolved.clone()),
    };
    let cfg = &resolved;
    match command {
        CommandKind::GenSynthetic => gen_synthetic(cfg, &mut rec)?,
        CommandKind::Subtag => {
            let ds = load_dataset(cfg, &mut rec)?;
            subtag(cfg, &ds, &mut rec)?;
        }
        CommandKind::Train => {
            let start = Instant::now();
            let tags = read_tagged_csv(cfg.tags_path())?;
            rec.time("read_tags", start);
            train(cfg, &tags, &mut rec)?;
        }
        CommandKind::Evaluate => {
            let ds = load_dataset(cfg, &mut rec)?;
            let model = SelectorModel::load(cfg.model_path())?;
            evaluate(cfg, &ds, &model, "evaluate", &mut rec)?;
        }
        CommandKind::Reproduce => reproduce(cfg, &mut rec)?,
    }
    let path = rec.path(&command.manifest_file());
    rec.manifest.save(&path)?;
    Ok(rec.manifest)
}

fn gen_synthetic(cfg: &RunConfig, rec: &mut Recorder) -> Result<()> {
    let start = Instant::now();
    let s = &cfg.synthetic;
    let noise = s.noise(derive_seed(cfg.seed, "gen_synthetic", &[]));
    let (refs, ds) = generate_synthetic(s.n_clusters, s.reads_per_cluster, s.center_len, &noise)?;
    write_centers(&refs, rec.path(CENTERS_FILE))?;
    rec.wrote(CENTERS_FILE);
    write_clusters(&ds, rec.path(CLUSTERS_FILE))?;
    rec.wrote(CLUSTERS_FILE);
    rec.time("gen_synthetic", start);
    Ok(())
}

fn load_dataset(cfg: &RunConfig, rec: &mut Recorder) -> Result<GroundTruthDataset> {
    let start = Instant::now();
    let ds = parse_clusters(&cfg.paths.clusters)?;
    if let Some(centers) = &cfg.paths.centers {
        let refs = parse_centers(centers)?;
        if refs.len() != ds.cluster_count() {
            rec.warn(format!(
                "{} lists {} centers but the clusters file has {} clusters",
                centers.display(),
                refs.len(),
                ds.cluster_count()
            ));
        }
    }
    rec.time("load_dataset", start);
    log::info!("loaded {} reads in {} clusters", ds.len(), ds.cluster_count());
    Ok(ds)
}

fn split(cfg: &RunConfig, ds: &GroundTruthDataset) -> Result<(GroundTruthDataset, GroundTruthDataset)> {
    Ok(split_clusters(ds, cfg.split_ratio, derive_seed(cfg.seed, "split", &[]))?)
}

fn subtag(cfg: &RunConfig, ds: &GroundTruthDataset, rec: &mut Recorder) -> Result<Vec<TaggedInstance>> {
    let start = Instant::now();
    let (train_side, _) = split(cfg, ds)?;
    let subsets = sample_subsets(
        &train_side,
        cfg.subsets.train,
        cfg.subsets.clusters_per_subset,
        derive_seed(cfg.seed, "train_subsets", &[]),
    )?;
    let tagging = cfg.tagging();
    let seed = derive_seed(cfg.seed, "subtag", &[]);
    let mut tags = Vec::with_capacity(subsets.len() * cfg.dims.len());
    for (i, subset) in subsets.iter().enumerate() {
        tags.extend(sub_tag(subset, i, &cfg.dims, &tagging, seed)?);
        log::info!("tagged subset {}/{}", i + 1, subsets.len());
    }
    write_tagged_csv(&tags, rec.path(TAGS_FILE))?;
    rec.wrote(TAGS_FILE);
    rec.manifest.tags = tags.iter().map(TagRecord::from).collect();
    rec.time("subtag", start);
    Ok(tags)
}

fn train(cfg: &RunConfig, tags: &[TaggedInstance], rec: &mut Recorder) -> Result<SelectorModel> {
    let start = Instant::now();
    let (pool, heldout) = split_by_subset(tags, cfg.subsets.heldout_fraction, derive_seed(cfg.seed, "heldout", &[]))?;
    let BoostOutcome {
        model,
        rounds,
        best_round,
    } = boost_train(&pool, &heldout, &cfg.selector, &cfg.tagging(), derive_seed(cfg.seed, "boost", &[]))?;
    model.save(rec.path(MODEL_FILE))?;
    rec.wrote(MODEL_FILE);

    let mut table = Table::new(
        "rounds",
        &[
            "round",
            "pool_size",
            "balanced_size",
            "features_kept",
            "hidden_layers",
            "l2_alpha",
            "learning_rate",
            "weighted_precision",
            "weighted_recall",
            "weighted_f1",
            "accuracy",
            "misclassified",
            "selected",
        ],
    );
    let mut cv = Table::new(
        "cv",
        &["round", "hidden_layers", "l2_alpha", "learning_rate", "fold_scores", "mean_score"],
    );
    for (i, r) in rounds.iter().enumerate() {
        table.push(vec![
            r.round.to_string(),
            r.pool_size.to_string(),
            r.balanced_size.to_string(),
            r.features_kept.to_string(),
            layers(&r.chosen.hidden_layers),
            r.chosen.l2_alpha.to_string(),
            r.chosen.learning_rate.to_string(),
            r.heldout.weighted_precision.to_string(),
            r.heldout.weighted_recall.to_string(),
            r.heldout.weighted_f1.to_string(),
            r.heldout.accuracy.to_string(),
            r.misclassified.len().to_string(),
            ((i == best_round) as u8).to_string(),
        ]);
        for row in &r.cv_table {
            let folds: Vec<String> = row.fold_scores.iter().map(f64::to_string).collect();
            cv.push(vec![
                r.round.to_string(),
                layers(&row.hidden_layers),
                row.l2_alpha.to_string(),
                row.learning_rate.to_string(),
                folds.join(";"),
                row.mean_score.to_string(),
            ]);
        }
    }
    rec.write_table(&table)?;
    rec.write_table(&cv)?;
    rec.manifest.rounds = rounds;
    rec.manifest.best_round = Some(best_round);
    rec.time("train", start);
    Ok(model)
}

fn layers(hidden: &[usize]) -> String {
    hidden.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// One (subset, dim) evaluation: all three fixed methods plus the selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub subset_id: usize,
    pub target_dim: usize,
    /// Indexed by `Method::index`.
    pub accuracies: [f64; 3],
    pub selected: Method,
}

impl Cell {
    pub fn selected_accuracy(&self) -> f64 {
        self.accuracies[self.selected.index()]
    }
}

/// Scores every method at every dim and asks the model for its choice. The
/// selected accuracy reuses the fixed-method run with the same cell seed.
pub fn score_subset(
    model: &SelectorModel,
    subset: &GroundTruthDataset,
    subset_id: usize,
    dims: &[usize],
    seed: u64,
) -> Result<Vec<Cell>> {
    let prepared = PreparedSubset::new(subset, subset_id, dims, &model.tagging)?;
    let accuracies = prepared.method_accuracies(dims, &model.tagging, seed)?;
    let rows = dims
        .iter()
        .map(|&d| meta_features_from_matrix(subset, &prepared.matrix, d))
        .collect::<adrs_core::Result<Vec<_>>>()?;
    let selected = model.predict_rows(&rows)?;
    Ok(dims
        .iter()
        .zip(accuracies)
        .zip(selected)
        .map(|((&target_dim, accuracies), selected)| Cell {
            subset_id,
            target_dim,
            accuracies,
            selected,
        })
        .collect())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Line-chart table: one row per dim, mean accuracy per method column.
pub fn per_dim_table(name: &str, dims: &[usize], cells: &[Cell]) -> Table {
    let mut t = Table::new(name, &PER_DIM_COLUMNS);
    for &d in dims {
        let at: Vec<&Cell> = cells.iter().filter(|c| c.target_dim == d).collect();
        let mut row = vec![d.to_string(), mean(at.iter().map(|c| c.selected_accuracy())).to_string()];
        row.extend(Method::ALL.iter().map(|m| mean(at.iter().map(|c| c.accuracies[m.index()])).to_string()));
        t.push(row);
    }
    t
}

/// Bar-chart table: mean accuracy over all cells per method.
pub fn mean_table(name: &str, cells: &[Cell]) -> Table {
    let mut t = Table::new(name, &["method", "mean_accuracy"]);
    t.push(vec!["SELECTED".into(), mean(cells.iter().map(Cell::selected_accuracy)).to_string()]);
    for m in Method::ALL {
        t.push(vec![m.to_string(), mean(cells.iter().map(|c| c.accuracies[m.index()])).to_string()]);
    }
    t
}

fn cells_table(cells: &[Cell]) -> Table {
    let mut t = Table::new(
        "evaluate_cells",
        &["subset_id", "target_dim", "selected", "best", "acc_selected", "acc_pca", "acc_tsne", "acc_umap"],
    );
    for c in cells {
        let mut row = vec![
            c.subset_id.to_string(),
            c.target_dim.to_string(),
            c.selected.to_string(),
            best_method(&c.accuracies).to_string(),
            c.selected_accuracy().to_string(),
        ];
        row.extend(c.accuracies.iter().map(f64::to_string));
        t.push(row);
    }
    t
}

fn evaluate(
    cfg: &RunConfig,
    ds: &GroundTruthDataset,
    model: &SelectorModel,
    prefix: &str,
    rec: &mut Recorder,
) -> Result<Vec<Cell>> {
    let start = Instant::now();
    let (_, test_side) = split(cfg, ds)?;
    let subsets = sample_subsets(
        &test_side,
        cfg.subsets.test,
        cfg.subsets.clusters_per_subset,
        derive_seed(cfg.seed, "test_subsets", &[]),
    )?;
    let seed = derive_seed(cfg.seed, "evaluate", &[]);
    let mut cells = Vec::with_capacity(subsets.len() * cfg.dims.len());
    for (i, subset) in subsets.iter().enumerate() {
        cells.extend(score_subset(model, subset, i, &cfg.dims, seed)?);
        log::info!("evaluated subset {}/{}", i + 1, subsets.len());
    }
    let truth: Vec<usize> = cells.iter().map(|c| best_method(&c.accuracies).index()).collect();
    let pred: Vec<usize> = cells.iter().map(|c| c.selected.index()).collect();
    let report = evaluate_metrics(&truth, &pred)?;
    let mut metrics = Table::new(
        "evaluate_metrics",
        &["weighted_precision", "weighted_recall", "weighted_f1", "accuracy", "cells"],
    );
    metrics.push(vec![
        report.weighted_precision.to_string(),
        report.weighted_recall.to_string(),
        report.weighted_f1.to_string(),
        report.accuracy.to_string(),
        cells.len().to_string(),
    ]);
    rec.write_table(&cells_table(&cells))?;
    rec.write_table(&metrics)?;
    if prefix == "evaluate" {
        rec.write_figure(per_dim_table("evaluate_per_dim", &cfg.dims, &cells))?;
        rec.write_figure(mean_table("evaluate_mean", &cells))?;
    }
    rec.time("evaluate", start);
    Ok(cells)
}

fn reproduce(cfg: &RunConfig, rec: &mut Recorder) -> Result<()> {
    let ds = load_dataset(cfg, rec)?;
    let tags = subtag(cfg, &ds, rec)?;
    let model = train(cfg, &tags, rec)?;
    let n_slices = cfg.reproduce.slices.len();
    for (j, &[lo, hi]) in cfg.reproduce.slices.iter().enumerate() {
        let start = Instant::now();
        if hi > ds.cluster_count() {
            rec.warn(format!(
                "slice [{lo}, {hi}) skipped: dataset has {} clusters",
                ds.cluster_count()
            ));
            continue;
        }
        let slice = slice_range(&ds, lo, hi)?;
        let limit = max_components(slice.len(), 4usize.pow(cfg.k as u32));
        let dims: Vec<usize> = cfg.dims.iter().copied().filter(|&d| d <= limit).collect();
        if dims.len() < cfg.dims.len() {
            rec.warn(format!(
                "slice [{lo}, {hi}) has {} reads; dims above {limit} dropped",
                slice.len()
            ));
        }
        if dims.is_empty() {
            continue;
        }
        let cells = score_subset(&model, &slice, lo, &dims, derive_seed(cfg.seed, "slice", &[j as u64]))?;
        rec.write_figure(per_dim_table(&format!("fig{}_slice_{lo}_{hi}", 2 + 2 * j), &dims, &cells))?;
        rec.write_figure(mean_table(&format!("fig{}_slice_{lo}_{hi}_mean", 3 + 2 * j), &cells))?;
        rec.time(&format!("slice_{lo}_{hi}"), start);
    }
    let cells = evaluate(cfg, &ds, &model, "reproduce", rec)?;
    rec.write_figure(per_dim_table(&format!("fig{}_random", 2 + 2 * n_slices), &cfg.dims, &cells))?;
    rec.write_figure(mean_table(&format!("fig{}_random_mean", 3 + 2 * n_slices), &cells))?;
    Ok(())
}

/// Re-renders an SVG chart from a figure CSV.
pub fn render_plot(csv: &Path, out: &Path) -> Result<()> {
    let table = Table::read_csv(csv)?;
    let svg = plot::render(&table)?;
    std::fs::write(out, svg).map_err(|e| CliError::io(out, e))
}
