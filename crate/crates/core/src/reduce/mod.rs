//! Dimensionality reduction: PCA, exact t-SNE and UMAP behind one spec type.

pub mod pca;
pub mod tsne;
pub mod umap;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pca::{pca_fit, PcaModel};
pub use tsne::{TsneAffinities, TsneParams};
pub use umap::{UmapGraph, UmapParams};

/// The three reduction methods, in label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PCA")]
    Pca,
    #[serde(rename = "TSNE")]
    Tsne,
    #[serde(rename = "UMAP")]
    Umap,
}

impl Method {
    /// Fixed label order used by the selector's output layer.
    pub const ALL: [Method; 3] = [Method::Pca, Method::Tsne, Method::Umap];

    pub fn index(self) -> usize {
        match self {
            Method::Pca => 0,
            Method::Tsne => 1,
            Method::Umap => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Method> {
        Method::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pca => "PCA",
            Method::Tsne => "TSNE",
            Method::Umap => "UMAP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "PCA" => Ok(Method::Pca),
            "TSNE" => Ok(Method::Tsne),
            "UMAP" => Ok(Method::Umap),
            _ => Err(Error::arg(format!("unknown reduction method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSpec {
    pub method: Method,
    pub target_dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub tsne: TsneParams,
    #[serde(default)]
    pub umap: UmapParams,
}

impl ReductionSpec {
    pub fn new(method: Method, target_dim: usize, seed: u64) -> Self {
        ReductionSpec {
            method,
            target_dim,
            seed,
            tsne: TsneParams::default(),
            umap: UmapParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_dim == 0 {
            return Err(Error::arg("target_dim must be >= 1"));
        }
        match self.method {
            Method::Pca => Ok(()),
            Method::Tsne => self.tsne.validate(),
            Method::Umap => self.umap.validate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Diagnostics {
    Pca { explained_variance_ratio: Vec<f64> },
    Tsne { initial_kl: f64, final_kl: f64 },
    Umap { final_cross_entropy: f64, a: f64, b: f64 },
}

/// Reduced coordinates, one row per input row.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Array2<f64>,
    pub spec: ReductionSpec,
    pub diagnostics: Diagnostics,
}

impl Embedding {
    /// Writes the coordinates with a `# spec=<json>` comment line first.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        out.push_str(&format!("# spec={}\n", serde_json::to_string(&self.spec)?));
        let header: Vec<String> = (0..self.coords.ncols()).map(|j| format!("dim{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in self.coords.rows() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn pca_transform(model: &PcaModel, x: ArrayView2<f64>) -> Result<Embedding> {
    let coords = model.transform(x)?;
    Ok(Embedding {
        coords,
        spec: ReductionSpec::new(Method::Pca, model.n_components(), 0),
        diagnostics: Diagnostics::Pca {
            explained_variance_ratio: model.explained_variance_ratio(),
        },
    })
}

/// Runs t-SNE with a PCA initialization computed from `x`.
pub fn tsne_embed(x: ArrayView2<f64>, spec: &ReductionSpec) -> Result<Embedding> {
    spec.validate()?;
    let affinities = TsneAffinities::compute(x, spec.tsne.perplexity)?;
    let projection = pca_fit(x, spec.target_dim)?.transform(x)?;
    tsne_from_parts(&affinities, projection, spec)
}

/// t-SNE from precomputed affinities and an unscaled PCA projection of the
/// right width.
pub fn tsne_from_parts(affinities: &TsneAffinities, projection: Array2<f64>, spec: &ReductionSpec) -> Result<Embedding> {
    if projection.ncols() != spec.target_dim {
        return Err(Error::shape(format!(
            "t-SNE init has {} columns, target_dim is {}",
            projection.ncols(),
            spec.target_dim
        )));
    }
    let init = tsne::scale_initialization(projection, spec.seed);
    let run = tsne::optimize(affinities, init, &spec.tsne)?;
    Ok(Embedding {
        coords: run.coords,
        spec: spec.clone(),
        diagnostics: Diagnostics::Tsne {
            initial_kl: run.initial_kl,
            final_kl: run.final_kl,
        },
    })
}

pub fn umap_embed(x: ArrayView2<f64>, spec: &ReductionSpec) -> Result<Embedding> {
    spec.validate()?;
    let graph = UmapGraph::build(x, &spec.umap)?;
    umap_from_graph(&graph, spec)
}

pub fn umap_from_graph(graph: &UmapGraph, spec: &ReductionSpec) -> Result<Embedding> {
    let init = umap::initial_layout(graph, spec.target_dim, &spec.umap, spec.seed)?;
    let run = umap::optimize(graph, init, &spec.umap, spec.seed)?;
    Ok(Embedding {
        coords: run.coords,
        spec: spec.clone(),
        diagnostics: Diagnostics::Umap {
            final_cross_entropy: run.final_cross_entropy,
            a: run.a,
            b: run.b,
        },
    })
}

/// Dispatches on `spec.method`.
pub fn reduce(x: ArrayView2<f64>, spec: &ReductionSpec) -> Result<Embedding> {
    spec.validate()?;
    let mut emb = match spec.method {
        Method::Pca => {
            let model = pca_fit(x, spec.target_dim)?;
            pca_transform(&model, x)?
        }
        Method::Tsne => tsne_embed(x, spec)?,
        Method::Umap => umap_embed(x, spec)?,
    };
    emb.spec = spec.clone();
    Ok(emb)
}
