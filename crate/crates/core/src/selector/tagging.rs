//! Scoring all three reduction methods on a subset and labelling it with the winner.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{clustering_accuracy, kmeans, KmeansParams};
use crate::dataset::GroundTruthDataset;
use crate::error::{Error, Result};
use crate::features::{build_kmer_matrix, KmerMatrix};
use crate::reduce::pca::max_components;
use crate::reduce::{
    pca_fit, tsne_from_parts, umap_from_graph, Method, ReductionSpec, TsneAffinities, TsneParams, UmapGraph,
    UmapParams,
};
use crate::rng::derive_seed;

use super::instance::TaggedInstance;

/// Everything a scoring run needs besides the subset and its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggingParams {
    pub k: usize,
    pub tsne: TsneParams,
    pub umap: UmapParams,
    pub kmeans_n_init: usize,
}

impl Default for TaggingParams {
    fn default() -> Self {
        TaggingParams {
            k: 5,
            tsne: TsneParams::default(),
            umap: UmapParams::default(),
            kmeans_n_init: 10,
        }
    }
}

impl TaggingParams {
    pub fn spec(&self, method: Method, target_dim: usize, seed: u64) -> ReductionSpec {
        ReductionSpec {
            tsne: self.tsne.clone(),
            umap: self.umap.clone(),
            ..ReductionSpec::new(method, target_dim, seed)
        }
    }
}

/// Meta-feature layout: column means of the k-mer matrix (`4^k` values), then
/// read count, cluster count, mean read length, target dim, log2(target dim).
pub fn meta_features(subset: &GroundTruthDataset, target_dim: usize, k: usize) -> Result<Vec<f64>> {
    let matrix = build_kmer_matrix(subset, k)?;
    meta_features_from_matrix(subset, &matrix, target_dim)
}

pub fn meta_features_from_matrix(subset: &GroundTruthDataset, matrix: &KmerMatrix, target_dim: usize) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::arg("meta-features of an empty subset"));
    }
    if target_dim == 0 {
        return Err(Error::arg("target_dim must be >= 1"));
    }
    let n = matrix.n_rows() as f64;
    let mut out: Vec<f64> = matrix.values.columns().into_iter().map(|c| c.sum() / n).collect();
    out.extend([
        n,
        subset.cluster_count() as f64,
        subset.mean_read_length(),
        target_dim as f64,
        (target_dim as f64).log2(),
    ]);
    Ok(out)
}

/// Number of trailing scalar entries after the column-mean block.
pub const META_SCALARS: usize = 5;

/// A subset's k-mer matrix with the method inputs that do not depend on the
/// target dimension computed once.
pub struct PreparedSubset<'a> {
    pub subset: &'a GroundTruthDataset,
    pub subset_id: usize,
    pub matrix: KmerMatrix,
    labels: Vec<usize>,
    projection: Array2<f64>,
    affinities: TsneAffinities,
    graph: UmapGraph,
}

impl<'a> PreparedSubset<'a> {
    pub fn new(subset: &'a GroundTruthDataset, subset_id: usize, dims: &[usize], params: &TaggingParams) -> Result<Self> {
        if subset.cluster_count() < 2 {
            return Err(Error::arg(format!(
                "subset {subset_id} has {} clusters, need at least 2",
                subset.cluster_count()
            )));
        }
        let matrix = build_kmer_matrix(subset, params.k)?;
        let limit = max_components(matrix.n_rows(), matrix.n_cols());
        if let Some(&bad) = dims.iter().find(|&&d| d == 0 || d > limit) {
            return Err(Error::arg(format!(
                "dim {bad} is invalid for subset {subset_id}: a {}x{} k-mer matrix allows 1..={limit}",
                matrix.n_rows(),
                matrix.n_cols()
            )));
        }
        let max_dim = dims.iter().copied().max().ok_or_else(|| Error::arg("no target dims given"))?;
        let x = matrix.values.view();
        let projection = pca_fit(x, max_dim)?.transform(x)?;
        let affinities = TsneAffinities::compute(x, params.tsne.perplexity)?;
        let graph = UmapGraph::build(x, &params.umap)?;
        Ok(PreparedSubset {
            subset,
            subset_id,
            labels: subset.labels(),
            matrix,
            projection,
            affinities,
            graph,
        })
    }

    fn leading(&self, dim: usize) -> ArrayView2<'_, f64> {
        self.projection.slice(ndarray::s![.., ..dim])
    }

    pub fn embed(&self, method: Method, dim: usize, params: &TaggingParams, seed: u64) -> Result<Array2<f64>> {
        let spec = params.spec(method, dim, seed);
        spec.validate()?;
        match method {
            Method::Pca => Ok(self.leading(dim).to_owned()),
            Method::Tsne => Ok(tsne_from_parts(&self.affinities, self.leading(dim).to_owned(), &spec)?.coords),
            Method::Umap => Ok(umap_from_graph(&self.graph, &spec)?.coords),
        }
    }

    /// Clustering accuracy of K-means on the `method` embedding at `dim`.
    pub fn accuracy(&self, method: Method, dim: usize, params: &TaggingParams, seed: u64) -> Result<f64> {
        let cell_seed = derive_seed(seed, "sub_tag", &[self.subset_id as u64, dim as u64, method.index() as u64]);
        let coords = self.embed(method, dim, params, cell_seed)?;
        let k = self.subset.cluster_count();
        let km = kmeans(
            coords.view(),
            &KmeansParams {
                n_init: params.kmeans_n_init,
                ..KmeansParams::with_k(k, cell_seed)
            },
        )?;
        clustering_accuracy(&km.assignments, &self.labels, k)
    }

    /// Accuracies for every dim, each indexed by `Method::index`.
    pub fn method_accuracies(&self, dims: &[usize], params: &TaggingParams, seed: u64) -> Result<Vec<[f64; 3]>> {
        let cells: Vec<(usize, Method)> = dims
            .iter()
            .flat_map(|&d| Method::ALL.into_iter().map(move |m| (d, m)))
            .collect();
        let scores = cells
            .par_iter()
            .map(|&(d, m)| self.accuracy(m, d, params, seed))
            .collect::<Result<Vec<f64>>>()?;
        Ok(scores.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
    }
}

/// Labels a subset once per target dim with the method whose embedding gives
/// the best K-means clustering accuracy.
pub fn sub_tag(
    subset: &GroundTruthDataset,
    subset_id: usize,
    dims: &[usize],
    params: &TaggingParams,
    seed: u64,
) -> Result<Vec<TaggedInstance>> {
    let prepared = PreparedSubset::new(subset, subset_id, dims, params)?;
    let accuracies = prepared.method_accuracies(dims, params, seed)?;
    dims.iter()
        .zip(accuracies)
        .map(|(&d, acc)| {
            let features = meta_features_from_matrix(subset, &prepared.matrix, d)?;
            Ok(TaggedInstance::from_accuracies(features, subset_id, d, acc))
        })
        .collect()
}
