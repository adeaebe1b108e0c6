//! Adaptive selection of a dimensionality reduction method for clustering
//! nanopore DNA reads.
//!
//! Reads are featurized as k-mer frequency vectors ([`features`]), reduced
//! with PCA, exact t-SNE or UMAP ([`reduce`]), clustered with K-means and
//! scored by majority-label accuracy ([`cluster`]). The [`selector`] module
//! labels read subsets with the method that clusters them best and trains an
//! MLP that predicts that method from subset-level features.

pub mod cluster;
pub mod dataset;
pub mod error;
pub mod features;
pub mod reduce;
pub mod rng;
pub mod selector;

pub use error::{Error, Result};
