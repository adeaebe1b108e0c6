use adrs_core::cluster::{clustering_accuracy, kmeans, KmeansParams};
use adrs_core::dataset::{generate_synthetic, parse_clusters, sample_subsets, write_clusters, NoiseModel};
use adrs_core::features::{apply_scaler, build_kmer_matrix, fit_scaler};
use adrs_core::reduce::{reduce, Method, ReductionSpec, TsneParams, UmapParams};
use adrs_core::selector::{boost_train, select_method, split_by_subset, sub_tag, BoostParams, TaggingParams};

fn small_tagging() -> TaggingParams {
    TaggingParams {
        k: 3,
        tsne: TsneParams {
            perplexity: 5.0,
            n_iter: 150,
            learning_rate: 50.0,
            ..Default::default()
        },
        umap: UmapParams {
            n_neighbors: 5,
            n_epochs: 60,
            ..Default::default()
        },
        kmeans_n_init: 3,
    }
}

#[test]
fn every_method_clusters_well_separated_reads() {
    let (_, ds) = generate_synthetic(6, 10, 80, &NoiseModel { seed: 4, ..Default::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("Clusters.txt");
    write_clusters(&ds, &path).unwrap();
    let ds = parse_clusters(&path).unwrap();
    let matrix = build_kmer_matrix(&ds, 3).unwrap();
    let scaled = apply_scaler(&fit_scaler(matrix.values.view()).unwrap(), matrix.values.view()).unwrap();
    assert_eq!(scaled.dim(), (60, 64));
    let tagging = small_tagging();
    for method in Method::ALL {
        let spec = tagging.spec(method, 3, 11);
        let emb = reduce(matrix.values.view(), &spec).unwrap();
        assert_eq!(emb.coords.dim(), (60, 3));
        let km = kmeans(emb.coords.view(), &KmeansParams::with_k(6, 2)).unwrap();
        let acc = clustering_accuracy(&km.assignments, &ds.labels(), 6).unwrap();
        assert!(acc >= 0.9, "{method} accuracy {acc}");
    }
}

#[test]
fn tagged_subsets_train_a_usable_selector() {
    let (_, ds) = generate_synthetic(40, 6, 60, &NoiseModel { seed: 9, ..Default::default() }).unwrap();
    let tagging = small_tagging();
    let subsets = sample_subsets(&ds, 8, 5, 1).unwrap();
    let mut tags = Vec::new();
    for (i, s) in subsets.iter().enumerate() {
        tags.extend(sub_tag(s, i, &[2, 3, 10], &tagging, 5).unwrap());
    }
    assert_eq!(tags.len(), 24);
    let (pool, heldout) = split_by_subset(&tags, 0.25, 3).unwrap();
    let params = BoostParams {
        rounds: 2,
        rfe_keep: 10,
        ..Default::default()
    };
    let outcome = boost_train(&pool, &heldout, &params, &tagging, 7).unwrap();
    assert!(outcome.rounds.len() <= 2);
    let spec = select_method(&outcome.model, &subsets[0], 2).unwrap();
    assert_eq!(spec.target_dim, 2);
    assert_eq!(spec, select_method(&outcome.model, &subsets[0], 2).unwrap());
}

#[test]
fn spec_validation_rejects_oversized_targets() {
    let (_, ds) = generate_synthetic(3, 4, 40, &NoiseModel::noiseless(1)).unwrap();
    let matrix = build_kmer_matrix(&ds, 2).unwrap();
    let err = reduce(matrix.values.view(), &ReductionSpec::new(Method::Pca, 12, 0)).unwrap_err();
    assert_eq!(err.category(), "argument");
}
