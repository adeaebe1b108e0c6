mod common;

use std::collections::BTreeSet;
use std::process::Command;

use adrs_cli::commands::{render_plot, PER_DIM_COLUMNS};
use adrs_cli::table::Table;
use adrs_cli::{execute, CommandKind, RunConfig};
use adrs_core::dataset::{generate_synthetic, parse_clusters};
use adrs_core::reduce::Method;
use adrs_core::rng::{derive_seed, rng_from_seed};
use adrs_core::selector::{read_tagged_csv, write_tagged_csv, SelectorModel, TaggedInstance};
use rand::Rng;

fn config_in(dir: &std::path::Path) -> RunConfig {
    common::tiny_config(dir)
}

#[test]
fn gen_synthetic_writes_parsable_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.synthetic.n_clusters = 10;
    cfg.synthetic.reads_per_cluster = 20;
    execute(CommandKind::GenSynthetic, &cfg).unwrap();
    let parsed = parse_clusters(dir.path().join("Clusters.txt")).unwrap();
    assert_eq!(parsed.cluster_count(), 10);
    assert_eq!(parsed.len(), 200);
    let noise = cfg.synthetic.noise(derive_seed(cfg.seed, "gen_synthetic", &[]));
    let (_, expected) = generate_synthetic(10, 20, cfg.synthetic.center_len, &noise).unwrap();
    assert_eq!(parsed, expected);

    cfg.synthetic.substitution_rate = 0.0;
    cfg.synthetic.insertion_rate = 0.0;
    cfg.synthetic.deletion_rate = 0.0;
    execute(CommandKind::GenSynthetic, &cfg).unwrap();
    let clean = parse_clusters(dir.path().join("Clusters.txt")).unwrap();
    for c in 0..10 {
        let block: BTreeSet<&str> = clean
            .reads()
            .iter()
            .filter(|r| r.cluster_id == Some(c))
            .map(|r| r.bases.as_str())
            .collect();
        assert_eq!(block.len(), 1, "cluster {c} has distinct reads");
    }
}

#[test]
fn subtag_emits_one_row_per_subset_and_dim() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.dims = vec![2];
    execute(CommandKind::GenSynthetic, &cfg).unwrap();
    let manifest = execute(CommandKind::Subtag, &cfg).unwrap();
    let tags = read_tagged_csv(dir.path().join("tags.csv")).unwrap();
    assert_eq!(tags.len(), cfg.subsets.train);
    assert_eq!(manifest.tags.len(), tags.len());
    assert!(tags.iter().all(|t| Method::ALL.contains(&t.label)));
    let first = std::fs::read(dir.path().join("tags.csv")).unwrap();
    execute(CommandKind::Subtag, &cfg).unwrap();
    assert_eq!(std::fs::read(dir.path().join("tags.csv")).unwrap(), first);
}

/// Meta-data whose label follows the dim entry: low dims favour t-SNE, high
/// dims PCA. The k-mer block is noise.
fn planted_tags(n_subsets: usize) -> Vec<TaggedInstance> {
    let mut rng = rng_from_seed(17);
    let mut out = Vec::new();
    for s in 0..n_subsets {
        for &d in &[2usize, 3, 10, 300, 500, 700] {
            let mut f: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..0.03)).collect();
            f.extend([rng.gen_range(500.0..900.0), 100.0, 110.0, d as f64, (d as f64).log2()]);
            let acc = if d <= 10 { [0.4, 0.95, 0.9] } else { [0.97, 0.7, 0.8] };
            out.push(TaggedInstance::from_accuracies(f, s, d, acc));
        }
    }
    out
}

#[test]
fn train_learns_planted_rule_and_reports_each_round() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path());
    cfg.selector.rounds = 1;
    cfg.selector.mlp.max_epochs = 500;
    write_tagged_csv(&planted_tags(20), dir.path().join("tags.csv")).unwrap();
    let manifest = execute(CommandKind::Train, &cfg).unwrap();
    assert_eq!(manifest.rounds.len(), 1);
    assert!(manifest.rounds[0].heldout.weighted_f1 >= 0.9, "{:?}", manifest.rounds[0].heldout);
    let rounds = Table::read_csv(dir.path().join("rounds.csv")).unwrap();
    assert_eq!(rounds.rows.len(), 1);
    let model = SelectorModel::load(dir.path().join("model.json")).unwrap();
    let rows: Vec<Vec<f64>> = planted_tags(2).into_iter().map(|t| t.features).collect();
    let picks = model.predict_rows(&rows).unwrap();
    assert_eq!(picks[0], Method::Tsne);
    assert_eq!(picks[5], Method::Pca);
}

#[test]
fn train_rejects_single_label_tags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    let tags: Vec<TaggedInstance> = planted_tags(6).into_iter().filter(|t| t.label == Method::Pca).collect();
    write_tagged_csv(&tags, dir.path().join("tags.csv")).unwrap();
    let err = execute(CommandKind::Train, &cfg).unwrap_err();
    assert!(err.to_string().contains("sample more subsets"), "{err}");
}

#[test]
fn evaluate_and_reproduce_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_in(dir.path());
    for c in [CommandKind::GenSynthetic, CommandKind::Subtag, CommandKind::Train] {
        execute(c, &cfg).unwrap();
    }
    execute(CommandKind::Evaluate, &cfg).unwrap();
    let per_dim = Table::read_csv(dir.path().join("evaluate_per_dim.csv")).unwrap();
    assert_eq!(per_dim.columns, PER_DIM_COLUMNS);
    assert_eq!(per_dim.rows.len(), cfg.dims.len());

    let cells = Table::read_csv(dir.path().join("evaluate_cells.csv")).unwrap();
    assert_eq!(cells.rows.len(), cfg.subsets.test * cfg.dims.len());
    let selected = cells.numeric_column(4).unwrap();
    let fixed: Vec<Vec<f64>> = (5..8).map(|j| cells.numeric_column(j).unwrap()).collect();
    for (i, s) in selected.iter().enumerate() {
        assert!(fixed.iter().any(|col| col[i] == *s), "cell {i} selected accuracy is not a fixed-method value");
    }
    for (r, row) in per_dim.rows.iter().enumerate() {
        let values: Vec<f64> = row[1..].iter().map(|v| v.parse().unwrap()).collect();
        let floor = values[1..].iter().copied().fold(f64::INFINITY, f64::min);
        assert!(values[0] >= floor - 1e-12, "dim row {r}: selected below every fixed method");
    }

    let manifest = execute(CommandKind::Reproduce, &cfg).unwrap();
    let line = Table::read_csv(dir.path().join("fig2_slice_0_5.csv")).unwrap();
    assert_eq!(line.rows.len(), 3);
    assert_eq!(line.columns.len(), 5);
    let bars = Table::read_csv(dir.path().join("fig7_random_mean.csv")).unwrap();
    assert_eq!(bars.rows.len(), 4);
    assert_eq!(manifest.figures.len(), 6);
    for fig in &manifest.figures {
        let csv = dir.path().join(format!("{}.csv", fig.name));
        let out = dir.path().join("regenerated.svg");
        render_plot(&csv, &out).unwrap();
        assert_eq!(
            std::fs::read(&out).unwrap(),
            std::fs::read(dir.path().join(format!("{}.svg", fig.name))).unwrap(),
            "{} does not regenerate identically",
            fig.name
        );
    }
}

#[test]
fn binary_reports_categorized_errors() {
    let bin = env!("CARGO_BIN_EXE_adrs");
    let out = Command::new(bin)
        .args(["--k", "2", "--dims", "2,99", "subtag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error [argument]"));

    let out = Command::new(bin)
        .args(["--clusters", "/definitely/missing/Clusters.txt", "subtag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error [io]"));

    let out = Command::new(bin).args(["show-config", "--seed", "11"]).output().unwrap();
    assert!(out.status.success());
    let shown = RunConfig::from_toml_str(&String::from_utf8_lossy(&out.stdout), std::path::Path::new("stdout")).unwrap();
    assert_eq!(shown.seed, 11);
}
