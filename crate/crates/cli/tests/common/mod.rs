use std::path::Path;

use adrs_cli::RunConfig;

/// A configuration small enough to run every command in seconds.
pub fn tiny_config(out: &Path) -> RunConfig {
    let text = format!(
        r#"
seed = 3
k = 3
dims = [2, 3, 10]
[paths]
clusters = "{clusters}"
output_dir = "{out}"
[subsets]
train = 8
test = 3
clusters_per_subset = 5
[synthetic]
n_clusters = 40
reads_per_cluster = 6
center_len = 60
[tsne]
perplexity = 5.0
n_iter = 120
learning_rate = 50.0
[umap]
n_neighbors = 5
n_epochs = 40
[reproduce]
slices = [[0, 5], [30, 35]]
[selector]
rounds = 2
rfe_keep = 10
[selector.grid]
hidden_layers = [[16]]
l2_alpha = [0.0001]
learning_rate = [0.01]
[selector.mlp]
max_epochs = 200
"#,
        clusters = out.join("Clusters.txt").display(),
        out = out.display()
    );
    RunConfig::from_toml_str(&text, Path::new("tiny.toml")).unwrap()
}
